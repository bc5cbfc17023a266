//! Running means and variances for vectors of per-draw quantities.

/// Welford accumulators for a fixed number of fields.
#[derive(Debug, Clone)]
pub struct Moments {
    count: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(fields: usize) -> Self {
        Self { count: 0, mean: vec![0.0; fields], m2: vec![0.0; fields] }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(x) {
            let delta = v - *mean;
            *mean += delta / n;
            *m2 += delta * (v - *mean);
        }
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for k in 0..self.mean.len() {
            let delta = other.mean[k] - self.mean[k];
            self.mean[k] += delta * nb / n;
            self.m2[k] += other.m2[k] + delta * delta * na * nb / n;
        }
        self.count += other.count;
    }

    pub fn mean(&self, k: usize) -> f64 {
        self.mean[k]
    }

    /// Standard error of the mean.
    pub fn std_error(&self, k: usize) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        (self.m2[k].max(0.0) / (n - 1.0) / n).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_single_pass() {
        let data: Vec<f64> = (0..1000).map(|k| ((k * 37 % 101) as f64).sin() * 3.0 + 1.0).collect();
        let mut all = Moments::new(1);
        data.iter().for_each(|x| all.push(&[*x]));
        let mut left = Moments::new(1);
        let mut right = Moments::new(1);
        data[..377].iter().for_each(|x| left.push(&[*x]));
        data[377..].iter().for_each(|x| right.push(&[*x]));
        left.merge(&right);
        assert_eq!(left.count(), 1000);
        assert!((left.mean(0) - all.mean(0)).abs() < 1e-13);
        assert!((left.std_error(0) - all.std_error(0)).abs() < 1e-13);

        let mean = data.iter().sum::<f64>() / 1000.0;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 999.0;
        assert!((all.std_error(0) - (var / 1000.0).sqrt()).abs() < 1e-12);
    }
}

//! Linear-interpolation quantiles (the convention most stats packages call
//! "type 7"): Q(p) sits at rank (n-1)·p and interpolates between the two
//! nearest order statistics.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Quartiles {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

/// Quantile of an already sorted, non-empty slice for p in [0, 1].
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile fraction out of range");
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 == sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Sorts a copy of `values` and returns its quartiles, or `None` when empty.
pub fn quartiles(values: &[f64]) -> Option<Quartiles> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("quantile of non-finite value"));
    Some(Quartiles {
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolated_quartiles() {
        // (n-1)p ranks: for [0,0,0,3], Q3 = 0 + 0.25 * 3.
        let q = quartiles(&[0.0, 0.0, 0.0, 3.0]).unwrap();
        assert_eq!(q.q1, 0.0);
        assert_eq!(q.median, 0.0);
        assert_eq!(q.q3, 0.75);
        assert_eq!(q.iqr(), 0.75);
    }

    #[test]
    fn median_of_odd_slice_is_middle() {
        let q = quartiles(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(q.median, 2.0);
    }

    #[test]
    fn single_value() {
        let q = quartiles(&[5.0]).unwrap();
        assert_eq!(q.q1, 5.0);
        assert_eq!(q.q3, 5.0);
    }

    #[test]
    fn empty_is_none() {
        assert!(quartiles(&[]).is_none());
    }
}

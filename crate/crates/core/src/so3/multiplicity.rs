use crate::error::{Error, Result};

fn factorial(n: u32) -> i128 {
    (1..=n as i128).product()
}

/// Number of copies of type `s` in the `l`-fold tensor power of the vector
/// representation, by counting `L_z` eigenspace dimensions.
pub fn multiplicity(l: u32, s: u32) -> Result<u64> {
    if s > l {
        return Err(Error::InvalidType(format!("type {s} exceeds tensor power {l}")));
    }
    if l > 30 {
        return Err(Error::InvalidType(format!("tensor power {l} is beyond the factorial range")));
    }
    let lf = factorial(l);
    let mut total: i128 = 0;
    for i in s..=(s + l) / 2 {
        total += lf / (factorial(i) * factorial(s + l - 2 * i) * factorial(i - s));
    }
    for i in (s + 1)..=(s + l + 1) / 2 {
        total -= lf / (factorial(i) * factorial(s + l + 1 - 2 * i) * factorial(i - s - 1));
    }
    u64::try_from(total).map_err(|_| Error::InvalidType(format!("negative multiplicity for ({l},{s})")))
}

/// All multiplicities `d_{l,0..=l}`.
pub fn decomposition(l: u32) -> Result<Vec<u64>> {
    (0..=l).map(|s| multiplicity(l, s)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listed_decompositions() {
        assert_eq!(decomposition(2).unwrap(), vec![1, 1, 1]);
        assert_eq!(decomposition(3).unwrap(), vec![1, 3, 2, 1]);
        assert_eq!(decomposition(4).unwrap(), vec![3, 6, 6, 3, 1]);
        assert_eq!(decomposition(5).unwrap(), vec![6, 15, 15, 10, 4, 1]);
    }

    #[test]
    fn closed_forms() {
        for l in 1..=8 {
            assert_eq!(multiplicity(l, l).unwrap(), 1);
            assert_eq!(multiplicity(l, l - 1).unwrap(), u64::from(l - 1));
            if l >= 2 {
                assert_eq!(multiplicity(l, l - 2).unwrap(), u64::from(l * (l - 1) / 2));
            }
        }
    }

    #[test]
    fn rejects_s_above_l() {
        assert!(matches!(multiplicity(2, 3), Err(Error::InvalidType(_))));
    }
}

//! Shortest round-trip float formatting for text and CSV output.

/// Formats `x` with the shortest digit string that parses back to the same
/// bits. Plain notation in the readable range, exponent notation outside it.
pub fn float(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn readable_forms() {
        assert_eq!(float(0.5), "0.5");
        assert_eq!(float(5e11), "500000000000");
        assert_eq!(float(1e-5), "1e-5");
        assert_eq!(float(2.5e20), "2.5e20");
        assert_eq!(float(0.0), "0");
    }

    proptest! {
        #[test]
        fn round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let s = float(x);
            prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}

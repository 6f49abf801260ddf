//! Fixed-precision number rendering for reports and tables.

/// Rounds to 6 significant digits. Non-finite values pass through.
pub fn sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

/// `sig6` rendered with Rust's shortest round-trip formatting.
pub fn render(x: f64) -> String {
    let r = sig6(x);
    if r == 0.0 {
        "0".to_string()
    } else {
        r.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(render(2.0 / 3.0), "0.666667");
        assert_eq!(render(1.0), "1");
        assert_eq!(render(-0.0), "0");
        assert_eq!(render(123456789.0), "123457000");
        assert_eq!(sig6(1.0000004), 1.0);
    }
}

//! Parsers for command-line values.

/// Accepts a decimal (`0.25`) or a fraction of integers (`1/6`). A fraction
/// is evaluated with a single correctly rounded division.
pub fn parse_ratio(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((num, den)) => {
            let num: i64 = num.trim().parse().map_err(|_| format!("bad numerator in '{s}'"))?;
            let den: i64 = den.trim().parse().map_err(|_| format!("bad denominator in '{s}'"))?;
            if den == 0 {
                return Err(format!("zero denominator in '{s}'"));
            }
            // |num|, |den| < 2^53 keeps both exact as f64
            if num.unsigned_abs() >= 1 << 53 || den.unsigned_abs() >= 1 << 53 {
                return Err(format!("fraction '{s}' too large to be exact"));
            }
            num as f64 / den as f64
        }
        None => s.parse::<f64>().map_err(|_| format!("'{s}' is neither a decimal nor a fraction"))?,
    };
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_are_exact() {
        assert_eq!(parse_ratio("1/6").unwrap(), 1.0 / 6.0);
        assert_eq!(parse_ratio("1/16").unwrap(), 0.0625);
        assert_eq!(parse_ratio(" 3 / 4 ").unwrap(), 0.75);
        assert_eq!(parse_ratio("0.25").unwrap(), 0.25);
        assert_eq!(parse_ratio("2.5e-1").unwrap(), 0.25);
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("a/2").is_err());
        assert!(parse_ratio("inf").is_err());
        assert!(parse_ratio("").is_err());
    }
}

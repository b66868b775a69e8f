//! Exact half-up rounding of integer ratios for table display.
//!
//! Ratios are rounded in integer arithmetic so that a value such as
//! 0.795 is never nudged across a rounding boundary by binary floating
//! point.

/// `num / den * scale`, rounded half-up to `decimals` places.
pub fn ratio_half_up(num: u128, den: u128, scale: u128, decimals: u32) -> String {
    if den == 0 {
        return format_fixed(0, decimals);
    }
    let pow = 10u128.pow(decimals);
    let scaled = num * scale * pow;
    let rounded = (2 * scaled + den) / (2 * den);
    format_fixed(rounded, decimals)
}

fn format_fixed(units: u128, decimals: u32) -> String {
    if decimals == 0 {
        return units.to_string();
    }
    let pow = 10u128.pow(decimals);
    format!(
        "{}.{:0width$}",
        units / pow,
        units % pow,
        width = decimals as usize
    )
}

/// Whole-percent share, e.g. `"55%"`.
pub fn percent(num: u64, den: u64) -> String {
    format!("{}%", ratio_half_up(num.into(), den.into(), 100, 0))
}

/// Percent to `sig` significant figures, e.g. `"3.5%"` or `"0.65%"`.
pub fn percent_sig(num: u64, den: u64, sig: u32) -> String {
    if num == 0 || den == 0 {
        return "0%".into();
    }
    let (num, den) = (u128::from(num), u128::from(den));
    // magnitude = floor(log10(100 * num / den))
    let mut magnitude: i32 = 0;
    while 100 * num >= den * 10u128.pow((magnitude + 1) as u32) {
        magnitude += 1;
    }
    while magnitude <= 0 && magnitude > -30 && 100 * num * 10u128.pow((-magnitude) as u32) < den {
        magnitude -= 1;
    }
    let decimals = (sig as i32 - 1 - magnitude).max(0) as u32;
    let text = ratio_half_up(num, den, 100, decimals);
    // Rounding up can add a digit (9.96 -> 10.0); drop the surplus decimal.
    let digits = text
        .chars()
        .filter(char::is_ascii_digit)
        .collect::<String>();
    let significant = digits.trim_start_matches('0').len() as u32;
    if decimals > 0 && significant > sig {
        return format!("{}%", ratio_half_up(num, den, 100, decimals - 1));
    }
    format!("{text}%")
}

/// Ratio of two ratios, `(a / b) / (c / d)`, to two decimals.
pub fn index(a: u64, b: u64, c: u64, d: u64) -> Option<String> {
    let num = u128::from(a) * u128::from(d);
    let den = u128::from(b) * u128::from(c);
    (den != 0).then(|| ratio_half_up(num, den, 1, 2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_up_at_exact_midpoint() {
        assert_eq!(ratio_half_up(1, 8, 1, 2), "0.13");
        assert_eq!(ratio_half_up(5, 2, 1, 0), "3");
        assert_eq!(ratio_half_up(1, 3, 100, 2), "33.33");
    }

    #[test]
    fn percent_whole() {
        assert_eq!(percent(1572, 2883), "55%");
        assert_eq!(percent(0, 0), "0%");
        assert_eq!(percent(7, 7), "100%");
    }

    #[test]
    fn significant_figures() {
        assert_eq!(percent_sig(35, 1004, 2), "3.5%");
        assert_eq!(percent_sig(11, 1680, 2), "0.65%");
        assert_eq!(percent_sig(1, 1, 2), "100%");
        assert_eq!(percent_sig(996, 10000, 2), "10%");
        assert_eq!(percent_sig(0, 5, 2), "0%");
    }

    #[test]
    fn index_rounding() {
        assert_eq!(index(183, 1004, 661, 2883).as_deref(), Some("0.79"));
        assert_eq!(index(1, 1, 1, 1).as_deref(), Some("1.00"));
        assert_eq!(index(1, 0, 1, 1), None);
    }
}

//! Text output helpers shared by the CSV writers.

/// Format `x` with nine significant digits. Plain decimal notation is used for
/// moderate magnitudes, scientific notation otherwise; trailing zeros are
/// trimmed so identical values always print identically.
pub fn fmt_sig(x: f64) -> String {
    fmt_sig_n(x, 9)
}

pub fn fmt_sig_n(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    // Rounding can carry into the next decade (9.9999999996 -> 10.0000000).
    let sci = format!("{:.*e}", digits - 1, x);
    let (_, e_str) = sci.split_once('e').expect("scientific format has an exponent");
    let exp = e_str.parse::<i32>().unwrap_or(exp);
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let (mantissa, e) = sci.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mantissa.to_string()), e)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

/// Join already formatted fields into one CSV line (no quoting needed: every
/// field this crate writes is numeric or a bare identifier).
pub fn csv_line<I: IntoIterator<Item = String>>(fields: I) -> String {
    let mut line = fields.into_iter().collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

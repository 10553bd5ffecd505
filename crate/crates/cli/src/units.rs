//! SI-suffixed quantities such as `500fF`, `100ps`, `31.25mV` or `10fF/um2`.
//!
//! Units are mandatory for dimensional values and prefixes are case
//! sensitive (`m` is milli, `M` is mega).

/// Splits `"31.25mV"` into `("31.25", "mV")`.
fn split_number(text: &str) -> (&str, &str) {
    let bytes = text.as_bytes();
    let mut i = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    // exponent only when followed by a digit, optionally signed
    if i < bytes.len() && matches!(bytes[i], b'e' | b'E') {
        let mut j = i + 1;
        if matches!(bytes.get(j), Some(b'+' | b'-')) {
            j += 1;
        }
        if bytes.get(j).is_some_and(u8::is_ascii_digit) {
            while j < bytes.len() && bytes[j].is_ascii_digit() {
                j += 1;
            }
            i = j;
        }
    }
    text.split_at(i)
}

/// Decimal exponent of an SI prefix.
fn prefix_exponent(prefix: &str) -> Option<i32> {
    Some(match prefix {
        "f" => -15,
        "p" => -12,
        "n" => -9,
        "u" | "µ" => -6,
        "m" => -3,
        "" => 0,
        "k" => 3,
        "M" => 6,
        "G" => 9,
        "T" => 12,
        _ => return None,
    })
}

/// Exponent of `unit` (e.g. `"mV"`) relative to the base symbol (e.g. `"V"`).
fn simple_exponent(unit: &str, base: &str) -> Option<i32> {
    prefix_exponent(unit.strip_suffix(base)?)
}

/// Exponent of a possibly compound unit such as `fF/um2` against `F/m2`.
fn unit_exponent(unit: &str, base: &str) -> Option<i32> {
    match base.split_once('/') {
        None => simple_exponent(unit, base),
        Some((num_base, den_base)) => {
            let (num, den) = unit.split_once('/')?;
            let (den_sym, power) = match den_base.strip_suffix('2') {
                Some(sym) => (sym, 2),
                None => (den_base, 1),
            };
            let den_unit = if power == 2 { den.strip_suffix('2')? } else { den };
            Some(simple_exponent(num, num_base)? - power * simple_exponent(den_unit, den_sym)?)
        }
    }
}

/// `v * 10^exp`, dividing for negative exponents so `60n` lands on `6e-8` exactly.
fn scale(v: f64, exp: i32) -> f64 {
    if exp >= 0 {
        v * 10f64.powi(exp)
    } else {
        v / 10f64.powi(-exp)
    }
}

fn parse_number(num: &str, original: &str) -> Result<f64, String> {
    if num.is_empty() {
        return Err(format!("{original:?} does not start with a number"));
    }
    let v: f64 = num.parse().map_err(|_| format!("{original:?} has a malformed number"))?;
    if !v.is_finite() {
        return Err(format!("{original:?} is not finite"));
    }
    Ok(v)
}

/// Parses a value that must carry `base` (with optional SI prefix) as its unit.
pub fn parse_quantity(text: &str, base: &str) -> Result<f64, String> {
    let text = text.trim();
    let (num, unit) = split_number(text);
    let v = parse_number(num, text)?;
    if unit.is_empty() {
        return Err(format!("{text:?} is missing its unit (expected {base})"));
    }
    let exp = unit_exponent(unit, base).ok_or_else(|| format!("{text:?} has unit {unit:?}, expected {base}"))?;
    Ok(scale(v, exp))
}

/// Parses a dimensionless number; any unit suffix is an error.
pub fn parse_plain(text: &str) -> Result<f64, String> {
    let text = text.trim();
    let (num, unit) = split_number(text);
    let v = parse_number(num, text)?;
    if !unit.is_empty() {
        return Err(format!("{text:?} is dimensionless and takes no unit"));
    }
    Ok(v)
}

/// Canonical rendering in base units; parses back to the identical value.
pub fn format_quantity(value: f64, base: &str) -> String {
    let mag = value.abs();
    if mag == 0.0 || (1e-3..1e6).contains(&mag) {
        format!("{value}{base}")
    } else {
        format!("{value:e}{base}")
    }
}

use num_bigint::BigUint;

use super::EncodingError;

/// Number of ways to choose `k` of `n` nodes, exactly.
pub fn search_space_size(n: u64, k: u64) -> Result<BigUint, EncodingError> {
    if k > n {
        return Err(EncodingError::TooManyUnits {
            units: k as usize,
            candidates: n as usize,
        });
    }
    let k = k.min(n - k);
    let mut acc = BigUint::from(1u32);
    for i in 1..=k {
        // exact at every step: acc is C(n - k + i - 1, i - 1)
        acc = acc * BigUint::from(n - k + i) / BigUint::from(i);
    }
    Ok(acc)
}

/// Scientific form with `digits` significant digits, e.g. `1.50e14`.
pub fn scientific(value: &BigUint, digits: usize) -> String {
    let digits = digits.max(1);
    if value.bits() == 0 {
        return format!("{}e0", pad("0", digits));
    }
    let s = value.to_str_radix(10);
    let mut exponent = s.len() - 1;
    let mut lead: Vec<u8> = s.bytes().take(digits).map(|b| b - b'0').collect();
    lead.resize(digits, 0);
    if s.as_bytes().get(digits).is_some_and(|&b| b >= b'5') {
        let mut i = digits;
        loop {
            if i == 0 {
                lead.insert(0, 1);
                lead.truncate(digits);
                exponent += 1;
                break;
            }
            i -= 1;
            if lead[i] == 9 {
                lead[i] = 0;
            } else {
                lead[i] += 1;
                break;
            }
        }
    }
    let text: String = lead.iter().map(|d| char::from(b'0' + d)).collect();
    format!("{}e{}", pad(&text, digits), exponent)
}

fn pad(text: &str, digits: usize) -> String {
    let mut t = text.to_string();
    t.extend(std::iter::repeat_n('0', digits.saturating_sub(t.len())));
    if digits == 1 {
        t
    } else {
        format!("{}.{}", &t[..1], &t[1..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(search_space_size(5, 2).unwrap(), BigUint::from(10u32));
        assert_eq!(search_space_size(5, 0).unwrap(), BigUint::from(1u32));
        assert_eq!(search_space_size(5, 5).unwrap(), BigUint::from(1u32));
        assert!(search_space_size(5, 6).is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(scientific(&BigUint::from(150018229951161u64), 3), "1.50e14");
        assert_eq!(scientific(&BigUint::from(10u32), 3), "1.00e1");
        assert_eq!(scientific(&BigUint::from(9996u32), 3), "1.00e4");
        assert_eq!(scientific(&BigUint::from(7u32), 1), "7e0");
        assert_eq!(scientific(&BigUint::from(0u32), 2), "0.0e0");
    }
}

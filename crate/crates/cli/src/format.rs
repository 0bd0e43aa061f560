//! JSON rendering with every number at 17 significant digits.

use serde_json::Value;

/// Shortest decimal text with 17 significant digits; integral values print
/// without a fraction, non-finite values as `null`.
pub fn number(x: f64) -> String {
    if !x.is_finite() {
        return "null".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    if x.fract() == 0.0 && x.abs() < 1e16 {
        return format!("{}", x as i64);
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let digits = digits.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    let body = if (0..17).contains(&exp) {
        let split = exp as usize + 1;
        if digits.len() <= split {
            format!("{digits}{}", "0".repeat(split - digits.len()))
        } else {
            format!("{}.{}", &digits[..split], &digits[split..])
        }
    } else if (-5..0).contains(&exp) {
        format!("0.{}{digits}", "0".repeat((-exp - 1) as usize))
    } else if digits.len() == 1 {
        format!("{digits}e{exp}")
    } else {
        format!("{}.{}e{exp}", &digits[..1], &digits[1..])
    };
    format!("{sign}{body}")
}

fn write(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => out.push_str(&i.to_string()),
            (_, Some(u)) => out.push_str(&u.to_string()),
            _ => out.push_str(&number(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write(item, out);
            }
            out.push(']');
        }
        Value::Object(map) => {
            out.push('{');
            for (i, (k, item)) in map.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push(':');
                write(item, out);
            }
            out.push('}');
        }
    }
}

pub fn render(v: &Value) -> String {
    let mut out = String::new();
    write(v, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(number(1.0), "1");
        assert_eq!(number(-0.0), "0");
        assert_eq!(number(0.5), "0.5");
        assert_eq!(number(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(number(-2.0 / 3.0), "-0.66666666666666663");
        assert_eq!(number(1e-7), "9.9999999999999995e-8");
        assert_eq!(number(2f64.powi(-23)), "1.1920928955078125e-7");
        assert_eq!(number(2f64.powi(-30)), "9.3132257461547852e-10");
        assert_eq!(number(123.5), "123.5");
        assert_eq!(number(1e20), "1e20");
        assert_eq!(number(0.001234), "0.0012340000000000001");
        assert_eq!(number(0.0009765625), "0.0009765625");
        assert_eq!(number(f64::NAN), "null");
    }

    #[test]
    fn round_trip() {
        for x in [0.1, 1.0 / 7.0, 2f64.sqrt(), 6.02e23, 1.6e-19, -123456.789] {
            assert_eq!(number(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn nested() {
        let v = serde_json::json!({"tau": 0.0, "a": [1.0, 0.5], "case": "i", "ok": true});
        assert_eq!(render(&v), r#"{"tau":0,"a":[1,0.5],"case":"i","ok":true}"#);
    }
}

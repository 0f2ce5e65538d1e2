//! Mini-format parser: `power:a=0.5`, `powerlog:a=1,b=0`, `explog:a=1,b=-2`,
//! `logpow:b=1`, `tab:@file.csv`; systems `arg(..)`, `val(..)`, `list(..|..)`.

use super::{Family, WeightFunction, WeightSystem};
use crate::{Error, Result};
use std::collections::HashMap;
use std::path::Path;

pub(crate) fn params(body: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for part in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
        let v: f64 = v.trim().parse().map_err(|_| Error::Parse(format!("bad number `{v}` for `{k}`")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

pub(crate) fn param(p: &HashMap<String, f64>, key: &str, spec: &str) -> Result<f64> {
    p.get(key).copied().ok_or_else(|| Error::Parse(format!("missing `{key}` in `{spec}`")))
}

/// Two numeric columns, optional header line, `#` comments.
pub(crate) fn read_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)?;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() < 2 {
            return Err(Error::Parse(format!("{}:{}: need two columns", path.display(), i + 1)));
        }
        match (cols[0].parse::<f64>(), cols[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                a.push(x);
                b.push(y);
            }
            _ if a.is_empty() => continue, // header
            _ => return Err(Error::Parse(format!("{}:{}: bad number", path.display(), i + 1))),
        }
    }
    Ok((a, b))
}

pub fn parse_weight_spec(spec: &str) -> Result<WeightFunction> {
    let spec = spec.trim();
    let (name, body) = spec.split_once(':').unwrap_or((spec, ""));
    if name == "tab" {
        let path = body
            .strip_prefix('@')
            .ok_or_else(|| Error::Parse(format!("tabulated weight needs `tab:@file`, got `{spec}`")))?;
        let (t, w) = read_columns(Path::new(path))?;
        return WeightFunction::tabulated(t, w);
    }
    let p = params(body)?;
    let family = match name {
        "power" => Family::Power { a: param(&p, "a", spec)? },
        "powerlog" => Family::PowerLog { a: param(&p, "a", spec)?, b: param(&p, "b", spec)? },
        "explog" => Family::ExpPowerLog { a: param(&p, "a", spec)?, b: param(&p, "b", spec)? },
        "logpow" => Family::LogPower { b: param(&p, "b", spec)? },
        _ => return Err(Error::Parse(format!("unknown weight family `{name}`"))),
    };
    WeightFunction::new(family)
}

/// `arg(power:a=0.5)`, `val(powerlog:a=1,b=0)`, `list(power:a=1|power:a=2)`.
/// A bare weight spec means `arg(..)`.
pub fn parse_system_spec(spec: &str) -> Result<WeightSystem> {
    let spec = spec.trim();
    let inner = |pre: &str| spec.strip_prefix(pre).and_then(|s| s.strip_suffix(')'));
    if let Some(body) = inner("arg(") {
        Ok(WeightSystem::scaled_argument(parse_weight_spec(body)?))
    } else if let Some(body) = inner("val(") {
        Ok(WeightSystem::scaled_value(parse_weight_spec(body)?))
    } else if let Some(body) = inner("list(") {
        let ws = body.split('|').map(parse_weight_spec).collect::<Result<Vec<_>>>()?;
        WeightSystem::explicit(ws)
    } else {
        Ok(WeightSystem::scaled_argument(parse_weight_spec(spec)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::SystemKind;

    #[test]
    fn parses_families() {
        assert_eq!(parse_weight_spec("power:a=0.5").unwrap(), WeightFunction::power(0.5));
        assert_eq!(parse_weight_spec("explog:a=1,b=-2").unwrap(), WeightFunction::exp_power_log(1.0, -2.0));
        assert_eq!(parse_weight_spec("logpow:b=1").unwrap(), WeightFunction::log_power(1.0));
        assert!(parse_weight_spec("power:b=1").is_err());
        assert!(parse_weight_spec("cosh:a=1").is_err());
    }

    #[test]
    fn parses_systems() {
        let s = parse_system_spec("val(powerlog:a=1,b=0)").unwrap();
        assert!(matches!(s.kind, SystemKind::ScaledValue(_)));
        let s = parse_system_spec("list(power:a=1|power:a=2)").unwrap();
        assert_eq!(s.max_index(), Some(2));
        let s = parse_system_spec("power:a=0.5").unwrap();
        assert!(matches!(s.kind, SystemKind::ScaledArgument(_)));
    }

    #[test]
    fn parses_tabulated_file() {
        let dir = std::env::temp_dir().join(format!("wtab-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let f = dir.join("w.csv");
        std::fs::write(&f, "t,w\n0,0\n1,1\n2,3\n").unwrap();
        let w = parse_weight_spec(&format!("tab:@{}", f.display())).unwrap();
        assert_eq!(w.eval(1.5), 2.0);
        assert_eq!(w.eval(3.0), 5.0);
    }
}

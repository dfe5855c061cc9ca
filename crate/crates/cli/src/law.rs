//! Offspring-law arguments.
//!
//! Accepted forms: `binary`, `zipf`, `igw:Q`, `finite:q0,q1,...`, or
//! `@path` for a JSON distribution record.

use std::fs;

use horton::distributions::{igw, OffspringDistribution};

use crate::Failure;

pub fn parse_law(arg: &str) -> Result<OffspringDistribution, Failure> {
    let arg = arg.trim();
    if let Some(path) = arg.strip_prefix('@') {
        let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {path}: {e}")))?;
        return serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("bad distribution in {path}: {e}")));
    }
    let (name, rest) = arg.split_once(':').unwrap_or((arg, ""));
    match name {
        "binary" => Ok(OffspringDistribution::binary()),
        "zipf" => Ok(OffspringDistribution::zipf_example()),
        "igw" => {
            let q: f64 = rest
                .parse()
                .map_err(|_| Failure::Usage(format!("igw needs a number, got '{rest}'")))?;
            Ok(igw(q)?)
        }
        "finite" => {
            let q = rest
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| Failure::Usage(format!("finite needs comma-separated numbers, got '{rest}'")))?;
            Ok(OffspringDistribution::finite(q)?)
        }
        _ => Err(Failure::Usage(format!(
            "unknown law '{arg}'; use binary, zipf, igw:Q, finite:q0,q1,... or @file.json"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse_law("binary").unwrap(), OffspringDistribution::binary());
        assert_eq!(parse_law("igw:0.75").unwrap(), igw(0.75).unwrap());
        assert_eq!(parse_law("finite:0.6,0,0.4").unwrap().q0(), 0.6);
        assert!(matches!(parse_law("igw:0.2"), Err(Failure::Usage(_))));
        assert!(matches!(parse_law("poisson"), Err(Failure::Usage(_))));
    }
}

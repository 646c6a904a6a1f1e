//! Builtin value functions for `fn` clauses in mappings.

use super::RowView;

/// Result of a function application. The primary value is always exposed to
/// the enclosing term map as the pseudo-column `_fn`; functions may bind
/// further pseudo-columns (gtfs_time adds `_time` and `_dayOffset`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FnOutput {
    pub primary: String,
    pub extras: Vec<(&'static str, String)>,
}

impl FnOutput {
    fn plain(primary: String) -> Self {
        FnOutput {
            primary,
            extras: Vec::new(),
        }
    }
}

/// `Ok(None)` means a referenced column was absent or empty: the enclosing
/// triple is skipped without a diagnostic. `Err` is a row-level diagnostic
/// (malformed input); the triple is skipped and the lift continues.
pub fn apply_function(
    name: &str,
    args: &[super::ResolvedArg],
    _row: &RowView<'_>,
) -> Result<Option<FnOutput>, String> {
    match name {
        "gtfs_date" => {
            let input = match single(args)? {
                Some(v) => v,
                None => return Ok(None),
            };
            gtfs_date(&input).map(FnOutput::plain).map(Some)
        }
        "gtfs_time" => {
            let input = match single(args)? {
                Some(v) => v,
                None => return Ok(None),
            };
            let (time, day_offset) = gtfs_time(&input)?;
            Ok(Some(FnOutput {
                primary: time.clone(),
                extras: vec![("_time", time), ("_dayOffset", day_offset.to_string())],
            }))
        }
        "trim" => {
            let input = match single(args)? {
                Some(v) => v,
                None => return Ok(None),
            };
            Ok(Some(FnOutput::plain(input.trim().to_string())))
        }
        "concat" => {
            let mut out = String::new();
            for arg in args {
                match arg {
                    super::ResolvedArg::Value(v) => out.push_str(v),
                    super::ResolvedArg::Missing(col) => {
                        let _ = col;
                        return Ok(None);
                    }
                }
            }
            Ok(Some(FnOutput::plain(out)))
        }
        other => Err(format!("unknown function {other:?}")),
    }
}

fn single(args: &[super::ResolvedArg]) -> Result<Option<String>, String> {
    match args {
        [super::ResolvedArg::Value(v)] => Ok(Some(v.clone())),
        [super::ResolvedArg::Missing(_)] => Ok(None),
        _ => Err(format!("expected exactly 1 argument, got {}", args.len())),
    }
}

/// `YYYYMMDD` -> `YYYY-MM-DD`.
fn gtfs_date(input: &str) -> Result<String, String> {
    if input.len() != 8 || !input.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("gtfs_date: expected 8 digits, got {input:?}"));
    }
    Ok(format!(
        "{}-{}-{}",
        &input[..4],
        &input[4..6],
        &input[6..8]
    ))
}

/// `HH:MM:SS` where HH may exceed 23 -> (`hh:MM:SS` with hh = HH mod 24,
/// day offset HH div 24).
fn gtfs_time(input: &str) -> Result<(String, u32), String> {
    let parts: Vec<&str> = input.split(':').collect();
    let err = || format!("gtfs_time: expected HH:MM:SS, got {input:?}");
    if parts.len() != 3 {
        return Err(err());
    }
    if parts[0].is_empty()
        || parts[0].len() > 3
        || parts[1].len() != 2
        || parts[2].len() != 2
        || parts.iter().any(|p| !p.bytes().all(|b| b.is_ascii_digit()))
    {
        return Err(err());
    }
    let hours: u32 = parts[0].parse().map_err(|_| err())?;
    let minutes: u32 = parts[1].parse().map_err(|_| err())?;
    let seconds: u32 = parts[2].parse().map_err(|_| err())?;
    if minutes > 59 || seconds > 59 {
        return Err(err());
    }
    Ok((
        format!("{:02}:{:02}:{:02}", hours % 24, minutes, seconds),
        hours / 24,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn date_reformat() {
        assert_eq!(gtfs_date("20200115").unwrap(), "2020-01-15");
        assert!(gtfs_date("2020011").is_err());
        assert!(gtfs_date("2020-1-5").is_err());
    }

    #[test]
    fn time_past_midnight() {
        assert_eq!(gtfs_time("25:10:00").unwrap(), ("01:10:00".into(), 1));
        assert_eq!(gtfs_time("08:05:00").unwrap(), ("08:05:00".into(), 0));
        assert_eq!(gtfs_time("8:05:00").unwrap(), ("08:05:00".into(), 0));
        assert_eq!(gtfs_time("48:00:59").unwrap(), ("00:00:59".into(), 2));
        assert!(gtfs_time("08:65:00").is_err());
        assert!(gtfs_time("0805:00").is_err());
    }
}

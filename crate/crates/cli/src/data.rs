//! Data files hold one observation per line. Blank lines and lines starting
//! with `#` are skipped; a vector observation lists its coordinates separated
//! by commas or whitespace.

use std::path::Path;

use nalgebra::DVector;

use crate::error::{CliError, CliResult};

pub fn parse_point(text: &str) -> CliResult<DVector<f64>> {
    let coords = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| CliError::input(format!("'{s}' is not a number"))))
        .collect::<CliResult<Vec<f64>>>()?;
    if coords.is_empty() {
        return Err(CliError::input("empty observation"));
    }
    if let Some(bad) = coords.iter().find(|v| !v.is_finite()) {
        return Err(CliError::input(format!("observation {bad} is not finite")));
    }
    Ok(DVector::from_vec(coords))
}

pub fn parse_observations(text: &str) -> CliResult<Vec<DVector<f64>>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_point(line).map_err(|e| CliError::input(format!("line {}: {e}", i + 1)))?);
    }
    if out.is_empty() {
        return Err(CliError::input("the data file contains no observations"));
    }
    if out.iter().any(|p| p.len() != out[0].len()) {
        return Err(CliError::input("observations have differing dimensions"));
    }
    Ok(out)
}

pub fn read_observations(path: &Path) -> CliResult<Vec<DVector<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_observations(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Future observations on the command line: points separated by `;`,
/// except that a scalar family also accepts a plain comma list.
pub fn parse_future(text: &str, dim: usize) -> CliResult<Vec<DVector<f64>>> {
    let points: Vec<DVector<f64>> = if dim == 1 && !text.contains(';') {
        text.split(',').map(parse_point).collect::<CliResult<_>>()?
    } else {
        text.split(';').map(parse_point).collect::<CliResult<_>>()?
    };
    if points.iter().any(|p| p.len() != dim) {
        return Err(CliError::input(format!("future points must have {dim} coordinate(s)")));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let obs = parse_observations("# header comment\n1.5\n\n  2\n# trailing\n0\n").unwrap();
        assert_eq!(obs.iter().map(|p| p[0]).collect::<Vec<_>>(), vec![1.5, 2.0, 0.0]);
    }

    #[test]
    fn vector_observations() {
        let obs = parse_observations("1, 2\n3 4\n").unwrap();
        assert_eq!(obs[1].as_slice(), &[3.0, 4.0]);
        assert!(parse_observations("1, 2\n3\n").is_err());
    }

    #[test]
    fn rejects_empty_and_garbage() {
        assert!(parse_observations("# nothing\n\n").is_err());
        assert!(parse_observations("1\nabc\n").is_err());
        assert!(parse_observations("nan\n").is_err());
    }

    #[test]
    fn futures() {
        assert_eq!(parse_future("1,2.5", 1).unwrap().len(), 2);
        let pts = parse_future("1,2;3,4", 2).unwrap();
        assert_eq!(pts[1].as_slice(), &[3.0, 4.0]);
        assert!(parse_future("1,2,3", 2).is_err());
    }
}

//! On-disk data formats for the built-in models.
//!
//! Coin toss: a single line `N,K1,K2`.
//! IRT: a header line `P,I` followed by `P` lines of `I` comma-separated
//! binary digits.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{CoinTossData, IrtData};

pub fn write_ct(path: &Path, data: &CoinTossData) -> Result<()> {
    let [k1, k2] = data.heads();
    fs::write(path, format!("{},{},{}\n", data.n_obs(), k1, k2))?;
    Ok(())
}

pub fn read_ct(path: &Path) -> Result<CoinTossData> {
    let text = fs::read_to_string(path)?;
    let line = text
        .lines()
        .next()
        .ok_or_else(|| Error::invalid(format!("{}: empty coin-toss file", path.display())))?;
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 3 {
        return Err(Error::invalid(format!(
            "{}: expected `N,K1,K2`, got `{line}`",
            path.display()
        )));
    }
    let parse = |s: &str| -> Result<u32> {
        s.parse()
            .map_err(|_| Error::invalid(format!("{}: `{s}` is not a count", path.display())))
    };
    CoinTossData::new(parse(fields[0])?, [parse(fields[1])?, parse(fields[2])?])
}

pub fn write_irt(path: &Path, data: &IrtData) -> Result<()> {
    let mut text = format!("{},{}\n", data.n_persons(), data.n_items());
    for person in 0..data.n_persons() {
        let row: Vec<String> = (0..data.n_items())
            .map(|item| data.response(person, item).to_string())
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_irt(path: &Path) -> Result<IrtData> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::invalid(format!("{}: empty IRT file", path.display())))?;
    let dims: Vec<&str> = header.split(',').map(str::trim).collect();
    if dims.len() != 2 {
        return Err(Error::invalid(format!(
            "{}: expected header `P,I`, got `{header}`",
            path.display()
        )));
    }
    let n_persons: usize = dims[0]
        .parse()
        .map_err(|_| Error::invalid(format!("{}: bad person count `{}`", path.display(), dims[0])))?;
    let n_items: usize = dims[1]
        .parse()
        .map_err(|_| Error::invalid(format!("{}: bad item count `{}`", path.display(), dims[1])))?;
    let mut responses = Vec::with_capacity(n_persons * n_items);
    for (row, line) in lines.take(n_persons).enumerate() {
        for field in line.split(',').map(str::trim) {
            let value: u8 = field.parse().map_err(|_| {
                Error::invalid(format!(
                    "{}: row {}: `{field}` is not a binary response",
                    path.display(),
                    row + 1
                ))
            })?;
            responses.push(value);
        }
    }
    IrtData::new(n_persons, n_items, responses)
}

//! Plain CSV view of a tree.
//!
//! Column headers carry the element kind: `px:u32` is a fixed 4-byte
//! scalar branch, `hits:[u16]` a jagged branch of 2-byte elements. Jagged
//! cells hold space-separated values; an empty cell is an empty entry.

use std::io::{Read, Write};

use basket_core::{BranchDescriptor, Column, ElementKind, Schema, Tree, Width};

fn type_name(width: Width) -> &'static str {
    match width {
        Width::W1 => "u8",
        Width::W2 => "u16",
        Width::W4 => "u32",
        Width::W8 => "u64",
    }
}

fn parse_type(s: &str) -> Option<Width> {
    match s {
        "u8" => Some(Width::W1),
        "u16" => Some(Width::W2),
        "u32" => Some(Width::W4),
        "u64" => Some(Width::W8),
        _ => None,
    }
}

pub fn header(branch: &BranchDescriptor) -> String {
    match branch.element {
        ElementKind::FixedScalar(w) => format!("{}:{}", branch.name, type_name(w)),
        ElementKind::JaggedArray(w) => format!("{}:[{}]", branch.name, type_name(w)),
    }
}

pub fn parse_header(cell: &str) -> Result<BranchDescriptor, String> {
    let (name, ty) = cell.rsplit_once(':').ok_or_else(|| {
        format!("column `{cell}` needs a type, e.g. `{cell}:u32` or `{cell}:[u16]`")
    })?;
    let bad = || format!("column `{cell}`: unknown type `{ty}`");
    let element = match ty.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        Some(inner) => ElementKind::JaggedArray(parse_type(inner).ok_or_else(bad)?),
        None => ElementKind::FixedScalar(parse_type(ty).ok_or_else(bad)?),
    };
    BranchDescriptor::new(name, element).map_err(|e| e.to_string())
}

pub fn write_tree<W: Write>(tree: &Tree, out: W, branches: &[usize]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    let schema = tree.schema().branches();
    w.write_record(branches.iter().map(|&b| header(&schema[b])))?;
    for entry in 0..tree.n_entries() {
        w.write_record(branches.iter().map(|&b| {
            match &tree.columns()[b] {
                Column::Scalars(v) => v[entry].to_string(),
                Column::Arrays(v) => v[entry]
                    .iter()
                    .map(u64::to_string)
                    .collect::<Vec<_>>()
                    .join(" "),
            }
        }))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tree<R: Read>(input: R) -> Result<Tree, String> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let branches = r
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(parse_header)
        .collect::<Result<Vec<_>, _>>()?;
    let mut columns: Vec<Column> = branches
        .iter()
        .map(|b| match b.element {
            ElementKind::FixedScalar(_) => Column::Scalars(Vec::new()),
            ElementKind::JaggedArray(_) => Column::Arrays(Vec::new()),
        })
        .collect();
    for (row, record) in r.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        for (b, cell) in record.iter().enumerate() {
            let parse = |v: &str| {
                v.parse::<u64>().map_err(|e| {
                    format!("row {}, column `{}`: `{v}`: {e}", row + 1, branches[b].name)
                })
            };
            match &mut columns[b] {
                Column::Scalars(v) => v.push(parse(cell.trim())?),
                Column::Arrays(v) => v.push(
                    cell.split_whitespace()
                        .map(parse)
                        .collect::<Result<_, _>>()?,
                ),
            }
        }
    }
    let schema = Schema::new(branches).map_err(|e| e.to_string())?;
    Tree::new(schema, columns).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let text = "id:u16,hits:[u8]\n1,5 6\n2,\n772,7\n";
        let tree = read_tree(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_tree(&tree, &mut out, &[0, 1]).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn header_errors() {
        assert!(parse_header("x").is_err());
        assert!(parse_header("x:i32").is_err());
        assert!(parse_header("x:[u24]").is_err());
        assert_eq!(
            parse_header("a:b:[u64]").unwrap(),
            BranchDescriptor::jagged("a:b", Width::W8).unwrap()
        );
    }
}

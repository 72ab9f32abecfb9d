//! Plain-text model checkpoints.
//!
//! ```text
//! gnn-v1 <input_dim> <hidden_dim> <num_classes>
//! <name> <rows> <cols>
//! <row-major floats, one matrix row per line>
//! ...
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a save/load
//! cycle is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{GnnModel, INPUT_DIM, NUM_CLASSES};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: &str = "gnn-v1";

pub fn save_model(model: &GnnModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_text(model))?;
    Ok(())
}

fn to_text(model: &GnnModel) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{CHECKPOINT_VERSION} {INPUT_DIM} {} {NUM_CLASSES}",
        model.hidden_dim()
    )
    .unwrap();
    for (name, block) in model.blocks() {
        writeln!(out, "{name} {} {}", block.nrows(), block.ncols()).unwrap();
        for row in block.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
    }
    out
}

pub fn load_model(path: impl AsRef<Path>) -> Result<GnnModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let fail = |version: &str, message: String| Error::Checkpoint {
        path: path.to_path_buf(),
        version: version.to_string(),
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines
        .next()
        .ok_or_else(|| fail("unknown", "empty file".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [version, input, hidden, classes] = fields.as_slice() else {
        return Err(fail("unknown", format!("malformed header {header:?}")));
    };
    if *version != CHECKPOINT_VERSION {
        return Err(fail(
            version,
            format!("unsupported format version, expected {CHECKPOINT_VERSION}"),
        ));
    }
    let dim = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|e| fail(version, format!("bad {what} {s:?}: {e}")))
    };
    let (input, hidden, classes) = (
        dim(input, "input dimension")?,
        dim(hidden, "hidden dimension")?,
        dim(classes, "class count")?,
    );
    if input != INPUT_DIM {
        return Err(fail(
            version,
            format!("input dimension: expected {INPUT_DIM}, got {input}"),
        ));
    }
    if classes != NUM_CLASSES {
        return Err(fail(
            version,
            format!("class count: expected {NUM_CLASSES}, got {classes}"),
        ));
    }
    if hidden == 0 {
        return Err(fail(version, "hidden dimension must be positive".into()));
    }

    let mut model = GnnModel::zeros(hidden);
    let shapes = GnnModel::block_shapes(hidden);
    for ((name, mut block), (rows, cols)) in model.blocks_mut().into_iter().zip(shapes) {
        let (n, line) = lines
            .next()
            .ok_or_else(|| fail(version, format!("truncated before block {name}")))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [got_name, got_rows, got_cols] = fields.as_slice() else {
            return Err(fail(
                version,
                format!("line {n}: malformed block header {line:?}"),
            ));
        };
        if *got_name != name {
            return Err(fail(
                version,
                format!("line {n}: expected block {name}, found {got_name}"),
            ));
        }
        let got = (dim(got_rows, "row count")?, dim(got_cols, "column count")?);
        if got != (rows, cols) {
            return Err(fail(
                version,
                format!(
                    "block {name}: expected {rows}x{cols} for hidden size {hidden}, got {}x{}",
                    got.0, got.1
                ),
            ));
        }
        for r in 0..rows {
            let (n, line) = lines
                .next()
                .ok_or_else(|| fail(version, format!("truncated inside block {name}")))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| fail(version, format!("line {n}: {e}")))?;
            if values.len() != cols {
                return Err(fail(
                    version,
                    format!("line {n}: expected {cols} values, got {}", values.len()),
                ));
            }
            for (dst, v) in block.row_mut(r).iter_mut().zip(values) {
                *dst = v;
            }
        }
    }
    if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
        return Err(fail(
            version,
            format!("line {n}: trailing data after last block"),
        ));
    }
    Ok(model)
}

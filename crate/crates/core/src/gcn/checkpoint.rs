//! Model checkpoints.
//!
//! Canonical little-endian binary layout:
//!
//! | field            | type            | count                      |
//! |------------------|-----------------|----------------------------|
//! | layer count L    | u64             | 1                          |
//! | layer dims       | u64             | L + 1                      |
//! | weights          | f64, row-major  | Σ dims[l]·dims[l+1]        |
//! | first moments    | f64, row-major  | same as weights            |
//! | second moments   | f64, row-major  | same as weights            |
//! | step counter     | u64             | 1                          |
//! | dropout rate     | f64             | 1                          |
//! | L2 weight        | f64             | 1                          |
//! | L2 first-layer   | u8 (0/1)        | 1                          |
//!
//! Trailing bytes are rejected, so files round-trip exactly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gcn::GcnModel;
use crate::graph::DenseMatrix;

fn write_f64s(out: &mut impl Write, values: &[f64]) -> Result<()> {
    for v in values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64(reader: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    reader.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64s(reader: &mut impl Read, count: usize) -> Result<Vec<f64>> {
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        reader.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(values)
}

pub fn save_checkpoint(model: &GcnModel, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let dims = model.layer_dims();
    out.write_all(&(model.n_layers() as u64).to_le_bytes())?;
    for &d in dims {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for w in model.weights() {
        write_f64s(&mut out, w.values())?;
    }
    let (m, v) = model.adam_moments();
    for mat in m {
        write_f64s(&mut out, mat.values())?;
    }
    for mat in v {
        write_f64s(&mut out, mat.values())?;
    }
    out.write_all(&model.adam_t().to_le_bytes())?;
    out.write_all(&model.dropout_rate().to_le_bytes())?;
    out.write_all(&model.l2_weight().to_le_bytes())?;
    out.write_all(&[u8::from(model.l2_first_layer_only())])?;
    out.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<GcnModel> {
    let mut reader = BufReader::new(File::open(path)?);
    let n_layers = read_u64(&mut reader)? as usize;
    if n_layers == 0 || n_layers > 1024 {
        return Err(Error::Format(format!(
            "{}: implausible layer count {}",
            path.display(),
            n_layers
        )));
    }
    let mut dims = Vec::with_capacity(n_layers + 1);
    for _ in 0..=n_layers {
        let d = read_u64(&mut reader)? as usize;
        if d == 0 {
            return Err(Error::Format(format!(
                "{}: zero-sized layer dimension",
                path.display()
            )));
        }
        dims.push(d);
    }
    let read_stack = |reader: &mut BufReader<File>| -> Result<Vec<DenseMatrix>> {
        let mut stack = Vec::with_capacity(n_layers);
        for w in dims.windows(2) {
            let values = read_f64s(reader, w[0] * w[1])?;
            stack.push(DenseMatrix::from_vec(w[0], w[1], values)?);
        }
        Ok(stack)
    };
    let weights = read_stack(&mut reader)?;
    let adam_m = read_stack(&mut reader)?;
    let adam_v = read_stack(&mut reader)?;
    let adam_t = read_u64(&mut reader)?;
    let dropout_rate = f64::from_le_bytes({
        let mut buf = [0u8; 8];
        reader.read_exact(&mut buf)?;
        buf
    });
    let l2_weight = f64::from_le_bytes({
        let mut buf = [0u8; 8];
        reader.read_exact(&mut buf)?;
        buf
    });
    let mut flag = [0u8; 1];
    reader.read_exact(&mut flag)?;
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!(
            "{}: {} trailing bytes",
            path.display(),
            rest.len()
        )));
    }
    if !(0.0..1.0).contains(&dropout_rate) || l2_weight < 0.0 || !l2_weight.is_finite() {
        return Err(Error::Format(format!(
            "{}: bad hyperparameters in checkpoint",
            path.display()
        )));
    }
    Ok(GcnModel::from_parts(
        dims,
        weights,
        adam_m,
        adam_v,
        adam_t,
        dropout_rate,
        l2_weight,
        flag[0] != 0,
    ))
}

//! Binary weight dump.
//!
//! Layout: magic `FXLSTM01`, u32 name length, UTF-8 spec name, u8 trained
//! flag, u64 parameter count, then each parameter as little-endian f64.

use std::io::{Read, Write};

use super::model::{Layout, LstmModel};
use super::spec::ModelSpec;
use super::LstmError;

pub const MAGIC: &[u8; 8] = b"FXLSTM01";

pub fn write_checkpoint<W: Write>(model: &LstmModel, mut out: W) -> Result<(), LstmError> {
    out.write_all(MAGIC)?;
    let name = model.spec.name.as_bytes();
    out.write_all(&(name.len() as u32).to_le_bytes())?;
    out.write_all(name)?;
    out.write_all(&[u8::from(model.trained)])?;
    out.write_all(&(model.params.len() as u64).to_le_bytes())?;
    for p in &model.params {
        out.write_all(&p.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N], LstmError> {
    let mut buf = [0u8; N];
    input.read_exact(&mut buf)?;
    Ok(buf)
}

pub fn read_checkpoint<R: Read>(mut input: R) -> Result<LstmModel, LstmError> {
    if &read_array::<8, _>(&mut input)? != MAGIC {
        return Err(LstmError::Checkpoint("bad magic".into()));
    }
    let name_len = u32::from_le_bytes(read_array(&mut input)?) as usize;
    if name_len > 256 {
        return Err(LstmError::Checkpoint(format!("implausible name length {name_len}")));
    }
    let mut name = vec![0u8; name_len];
    input.read_exact(&mut name)?;
    let name = String::from_utf8(name).map_err(|e| LstmError::Checkpoint(e.to_string()))?;
    let spec = ModelSpec::by_name(&name)?;
    let trained = match read_array::<1, _>(&mut input)?[0] {
        0 => false,
        1 => true,
        other => return Err(LstmError::Checkpoint(format!("bad trained flag {other}"))),
    };
    let count = u64::from_le_bytes(read_array(&mut input)?) as usize;
    let layout = Layout::for_spec(&spec);
    if count != layout.param_count {
        return Err(LstmError::Checkpoint(format!(
            "{name} has {} parameters, checkpoint holds {count}",
            layout.param_count
        )));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        params.push(f64::from_le_bytes(read_array(&mut input)?));
    }
    let mut rest = Vec::new();
    input.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(LstmError::Checkpoint(format!("{} trailing bytes", rest.len())));
    }
    Ok(LstmModel {
        spec,
        layout,
        params,
        trained,
    })
}

//! Binary state dumps: `b"WBL1"`, then `D`, `k`, `ℓ` as `u32` LE, then
//! interleaved `re, im` as `f64` LE.

use std::io::{Read, Write};

use super::{EngineConfig, QuditState};
use crate::{Error, Result, C64};

const MAGIC: &[u8; 4] = b"WBL1";

pub fn write_state<W: Write>(mut w: W, cfg: &EngineConfig, state: &QuditState) -> Result<()> {
    if state.amps.len() != cfg.n {
        return Err(Error::Format("state length does not match configuration".into()));
    }
    w.write_all(MAGIC)?;
    for v in [cfg.d, cfg.k, cfg.ell] {
        w.write_all(&v.to_le_bytes())?;
    }
    for a in &state.amps {
        w.write_all(&a.re.to_le_bytes())?;
        w.write_all(&a.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_state<R: Read>(mut r: R) -> Result<(EngineConfig, QuditState)> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::Format("bad magic in state dump".into()));
    }
    let word = |i: usize| u32::from_le_bytes(head[4 * i..4 * i + 4].try_into().unwrap());
    let cfg = EngineConfig::new(word(1), word(2), word(3))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != cfg.n * 16 {
        return Err(Error::Format(format!(
            "expected {} amplitude bytes, got {}",
            cfg.n * 16,
            body.len()
        )));
    }
    let f = |i: usize| f64::from_le_bytes(body[8 * i..8 * i + 8].try_into().unwrap());
    let amps = (0..cfg.n).map(|i| C64::new(f(2 * i), f(2 * i + 1))).collect();
    Ok((
        cfg,
        QuditState {
            d: cfg.d,
            k: cfg.k,
            amps,
        },
    ))
}

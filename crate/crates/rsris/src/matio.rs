//! Binary container for channel statistics, so covariance ensembles can be
//! produced by external tools and imported verbatim.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "CMAT"
//! version u32      1
//! M, K, N u32 each
//! delta   f64
//! then, row-major with interleaved (re: f64, im: f64) entries:
//!   C_d[0..K]  each M x M
//!   C_r[0..K]  each N x N
//!   T_bar      N x M
//!   R_RIS      N x N
//!   R_Tx       M x M
//! ```
//!
//! Import validates every structural invariant (dimensions, Hermitian
//! symmetry, positive semidefiniteness) through [`ChannelStatistics::new`].

use std::io::{Read, Write};
use std::path::Path;

use crate::channel::{ChannelStatistics, SystemDims};
use crate::{C64, CMat, Error, Result};

const MAGIC: &[u8; 4] = b"CMAT";
const VERSION: u32 = 1;

fn write_matrix<W: Write>(w: &mut W, m: &CMat) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            w.write_all(&m[(i, j)].re.to_le_bytes())?;
            w.write_all(&m[(i, j)].im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R, rows: usize, cols: usize) -> Result<CMat> {
    let mut buf = [0u8; 16];
    let mut out = CMat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            r.read_exact(&mut buf)
                .map_err(|e| Error::Container(format!("truncated matrix data: {e}")))?;
            let re = f64::from_le_bytes(buf[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..16].try_into().unwrap());
            out[(i, j)] = C64::new(re, im);
        }
    }
    Ok(out)
}

/// Serializes statistics into the container format.
pub fn export_statistics<W: Write>(w: &mut W, stats: &ChannelStatistics) -> Result<()> {
    let dims = stats.dims();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dims.m as u32).to_le_bytes())?;
    w.write_all(&(dims.k as u32).to_le_bytes())?;
    w.write_all(&(dims.n as u32).to_le_bytes())?;
    w.write_all(&stats.delta().to_le_bytes())?;
    for k in 0..dims.k {
        write_matrix(w, stats.c_d(k))?;
    }
    for k in 0..dims.k {
        write_matrix(w, stats.c_r(k))?;
    }
    write_matrix(w, stats.t_bar())?;
    write_matrix(w, stats.r_ris())?;
    write_matrix(w, stats.r_tx())?;
    Ok(())
}

/// Deserializes and validates statistics from the container format.
pub fn import_statistics<R: Read>(r: &mut R) -> Result<ChannelStatistics> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::Container(format!("missing header: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Container(format!("bad magic {magic:?}, expected {MAGIC:?}")));
    }
    let mut u32buf = [0u8; 4];
    let mut read_u32 = |r: &mut R| -> Result<u32> {
        r.read_exact(&mut u32buf)
            .map_err(|e| Error::Container(format!("truncated header: {e}")))?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Container(format!("unsupported version {version}")));
    }
    let m = read_u32(r)? as usize;
    let k = read_u32(r)? as usize;
    let n = read_u32(r)? as usize;
    let mut f64buf = [0u8; 8];
    r.read_exact(&mut f64buf)
        .map_err(|e| Error::Container(format!("truncated header: {e}")))?;
    let delta = f64::from_le_bytes(f64buf);

    let dims = SystemDims::new(m, k, n)?;
    let c_d: Vec<CMat> = (0..k).map(|_| read_matrix(r, m, m)).collect::<Result<_>>()?;
    let c_r: Vec<CMat> = (0..k).map(|_| read_matrix(r, n, n)).collect::<Result<_>>()?;
    let t_bar = read_matrix(r, n, m)?;
    let r_ris = read_matrix(r, n, n)?;
    let r_tx = read_matrix(r, m, m)?;
    ChannelStatistics::new(dims, delta, c_d, c_r, t_bar, r_ris, r_tx)
}

pub fn save_statistics(path: &Path, stats: &ChannelStatistics) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    export_statistics(&mut file, stats)
}

pub fn load_statistics(path: &Path) -> Result<ChannelStatistics> {
    let mut file = std::io::BufReader::new(std::fs::File::open(path)?);
    import_statistics(&mut file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::synthesize_covariances;
    use crate::scenario::ScenarioConfig;
    use crate::seeding::rng_from;

    #[test]
    fn round_trip_is_bitwise() {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.n = 6;
        let stats = synthesize_covariances(&scenario, &mut rng_from(1, &[])).unwrap();
        let mut buf = Vec::new();
        export_statistics(&mut buf, &stats).unwrap();
        let back = import_statistics(&mut buf.as_slice()).unwrap();
        assert_eq!(stats.dims(), back.dims());
        assert_eq!(stats.delta(), back.delta());
        for k in 0..stats.dims().k {
            assert_eq!(stats.c_d(k), back.c_d(k));
            assert_eq!(stats.c_r(k), back.c_r(k));
        }
        assert_eq!(stats.t_bar(), back.t_bar());
        assert_eq!(stats.r_ris(), back.r_ris());
        assert_eq!(stats.r_tx(), back.r_tx());
    }

    #[test]
    fn import_rejects_non_hermitian() {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.n = 4;
        let stats = synthesize_covariances(&scenario, &mut rng_from(2, &[])).unwrap();
        let mut buf = Vec::new();
        export_statistics(&mut buf, &stats).unwrap();
        // corrupt one off-diagonal entry of C_d[0]: header is 4+4+12+8 = 28
        // bytes, entry (0,1) of C_d[0] sits 16 bytes after that; flip an
        // exponent bit of its imaginary part
        let offset = 28 + 16 + 8 + 6;
        buf[offset] ^= 0x40;
        let err = import_statistics(&mut buf.as_slice()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("C_d[0]"), "unexpected error: {msg}");
    }

    #[test]
    fn import_rejects_truncation() {
        let mut scenario = ScenarioConfig::desk_default();
        scenario.n = 4;
        let stats = synthesize_covariances(&scenario, &mut rng_from(3, &[])).unwrap();
        let mut buf = Vec::new();
        export_statistics(&mut buf, &stats).unwrap();
        buf.truncate(buf.len() - 9);
        assert!(matches!(import_statistics(&mut buf.as_slice()), Err(Error::Container(_))));
    }
}

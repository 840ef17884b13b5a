//! On-disk artifact formats: the JSON profile file, CSV spectra and norm
//! series, and the binary snapshot container.

use crate::bloch::SpectrumSlice;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::field::ExtendedField;
use crate::profile::{LLEParams, WaveProfile};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const PROFILE_SCHEMA_VERSION: u32 = 1;
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"LLESNAP\x01";

/// JSON wire form of a wave profile. Coefficient arrays run over
/// `l = -K..K` ascending; floats use the shortest round-trip decimal.
#[derive(Debug, Serialize, Deserialize)]
pub struct ProfileFile {
    pub schema_version: u32,
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "F")]
    pub forcing: f64,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "K")]
    pub n_modes: usize,
    pub coeff_re: Vec<f64>,
    pub coeff_im: Vec<f64>,
    pub residual_norm: f64,
}

impl ProfileFile {
    pub fn from_profile(p: &WaveProfile) -> ProfileFile {
        ProfileFile {
            schema_version: PROFILE_SCHEMA_VERSION,
            alpha: p.params.alpha,
            beta: p.params.beta,
            forcing: p.params.forcing,
            period: p.period,
            n_modes: p.n_modes,
            coeff_re: p.coeffs.iter().map(|z| z.re).collect(),
            coeff_im: p.coeffs.iter().map(|z| z.im).collect(),
            residual_norm: p.residual_norm,
        }
    }

    pub fn into_profile(self) -> Result<WaveProfile> {
        if self.schema_version != PROFILE_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                found: self.schema_version,
                expected: PROFILE_SCHEMA_VERSION,
            });
        }
        let want = 2 * self.n_modes + 1;
        if self.coeff_re.len() != want {
            return Err(Error::Parse(format!(
                "coeff_re has {} entries, expected 2K+1 = {want}",
                self.coeff_re.len()
            )));
        }
        if self.coeff_im.len() != want {
            return Err(Error::Parse(format!(
                "coeff_im has {} entries, expected 2K+1 = {want}",
                self.coeff_im.len()
            )));
        }
        if !(self.period > 0.0) {
            return Err(Error::Parse(format!("period T = {} must be positive", self.period)));
        }
        Ok(WaveProfile {
            params: LLEParams {
                alpha: self.alpha,
                beta: self.beta,
                forcing: self.forcing,
            },
            period: self.period,
            n_modes: self.n_modes,
            coeffs: self
                .coeff_re
                .iter()
                .zip(&self.coeff_im)
                .map(|(&r, &i)| C64::new(r, i))
                .collect(),
            residual_norm: self.residual_norm,
        })
    }
}

pub fn save_profile(p: &WaveProfile, path: &Path) -> Result<()> {
    let file = ProfileFile::from_profile(p);
    let text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Parse(format!("profile serialization failed: {e}")))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub fn load_profile(path: &Path) -> Result<WaveProfile> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::Parse(format!("{}: empty profile file", path.display())));
    }
    let file: ProfileFile = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    file.into_profile()
}

/// CSV rows `xi,re,im`: xi ascending, eigenvalues by descending real part
/// within each xi, 17 significant digits.
pub fn save_spectrum(slices: &[SpectrumSlice], path: &Path) -> Result<()> {
    let mut out = String::from("xi,re,im\n");
    let mut prev = f64::NEG_INFINITY;
    for s in slices {
        if s.xi < prev {
            return Err(Error::Structure("spectrum slices must be xi-ascending".into()));
        }
        prev = s.xi;
        for l in &s.eigenvalues {
            out.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", s.xi, l.re, l.im));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_spectrum(path: &Path) -> Result<Vec<(f64, C64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("xi,re,im") => {}
        other => {
            return Err(Error::Parse(format!(
                "{}: bad spectrum header {other:?}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut next = |field: &str| -> Result<f64> {
            parts
                .next()
                .ok_or_else(|| Error::Parse(format!("row {}: missing {field}", i + 2)))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {field}: {e}", i + 2)))
        };
        let xi = next("xi")?;
        let re = next("re")?;
        let im = next("im")?;
        rows.push((xi, C64::new(re, im)));
    }
    Ok(rows)
}

/// CSV of the dense norm series: `t,d0,...,d4` with
/// `dj = ||d^j/dx^j (psi - phi)||_{L^2}`.
pub fn save_norm_series(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut out = String::from("t,d0,d1,d2,d3,d4\n");
    for (t, row) in traj.times.iter().zip(&traj.norm_series) {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            t, row[0], row[1], row[2], row[3], row[4]
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Binary snapshot container: 8 magic bytes, little-endian header
/// (M: u32, N: u32, T: f64, dtype: u8 = 1 for complex128), then the
/// complex samples `vr + i vi` as raw little-endian f64 pairs.
pub fn save_snapshot(f: &ExtendedField, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&(f.m_cells as u32).to_le_bytes())?;
    w.write_all(&(f.n_per_cell as u32).to_le_bytes())?;
    w.write_all(&f.period.to_le_bytes())?;
    w.write_all(&[1u8])?;
    for j in 0..f.total_points() {
        w.write_all(&f.vr[j].re.to_le_bytes())?;
        w.write_all(&f.vi[j].re.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<ExtendedField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Parse(format!("{}: truncated snapshot header", path.display())))?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(Error::Parse(format!("{}: bad snapshot magic", path.display())));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let m = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let period = f64::from_le_bytes(b8);
    let mut dtype = [0u8; 1];
    r.read_exact(&mut dtype)?;
    if dtype[0] != 1 {
        return Err(Error::Parse(format!(
            "{}: unknown snapshot dtype {}",
            path.display(),
            dtype[0]
        )));
    }
    if m == 0 || n == 0 || !(period > 0.0) {
        return Err(Error::Parse(format!("{}: bad snapshot header", path.display())));
    }
    let mut f = ExtendedField::zeros(m, n, period);
    for j in 0..m * n {
        r.read_exact(&mut b8)
            .map_err(|_| Error::Parse(format!("{}: truncated snapshot data", path.display())))?;
        f.vr[j] = C64::new(f64::from_le_bytes(b8), 0.0);
        r.read_exact(&mut b8)
            .map_err(|_| Error::Parse(format!("{}: truncated snapshot data", path.display())))?;
        f.vi[j] = C64::new(f64::from_le_bytes(b8), 0.0);
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{assemble_bloch, spectrum_slice};
    use crate::profile::{bifurcation_seed, profile_residual, solve_profile};
    use tempfile::tempdir;

    fn wave() -> WaveProfile {
        let seed = bifurcation_seed(1.0, 0.01, 12).unwrap();
        solve_profile(&seed, 1e-13).unwrap()
    }

    #[test]
    fn profile_roundtrip_is_bit_exact() {
        let p = wave();
        let dir = tempdir().unwrap();
        let path = dir.path().join("wave.profile");
        save_profile(&p, &path).unwrap();
        let q = load_profile(&path).unwrap();
        assert_eq!(p.params.alpha.to_bits(), q.params.alpha.to_bits());
        assert_eq!(p.params.forcing.to_bits(), q.params.forcing.to_bits());
        assert_eq!(p.period.to_bits(), q.period.to_bits());
        assert_eq!(p.n_modes, q.n_modes);
        for (a, b) in p.coeffs.iter().zip(&q.coeffs) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        // Re-evaluated residual identical to the stored state.
        let r = profile_residual(&q);
        assert!((r - p.residual_norm).abs() <= 1e-14);
    }

    #[test]
    fn empty_and_mismatched_files_are_parse_errors() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("empty.profile");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(load_profile(&path), Err(Error::Parse(_))));

        let p = wave();
        let mut file = ProfileFile::from_profile(&p);
        file.n_modes += 1;
        let path = dir.path().join("bad_k.profile");
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        match load_profile(&path) {
            Err(Error::Parse(msg)) => assert!(msg.contains("coeff_re"), "message: {msg}"),
            other => panic!("expected parse error, got {other:?}"),
        }

        let mut file = ProfileFile::from_profile(&p);
        file.schema_version = 99;
        let path = dir.path().join("vers.profile");
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(matches!(
            load_profile(&path),
            Err(Error::SchemaVersion { found: 99, expected: 1 })
        ));
    }

    #[test]
    fn spectrum_csv_roundtrips_and_keeps_the_ordering() {
        let p = wave();
        let slices: Vec<_> = (0..5)
            .map(|i| {
                let xi = -0.2 + 0.1 * i as f64;
                spectrum_slice(&assemble_bloch(&p, xi, 8).unwrap()).unwrap()
            })
            .collect();
        let dir = tempdir().unwrap();
        let path = dir.path().join("spec.csv");
        save_spectrum(&slices, &path).unwrap();
        let rows = load_spectrum(&path).unwrap();
        let mut idx = 0;
        for s in &slices {
            for l in &s.eigenvalues {
                let (xi, z) = rows[idx];
                assert_eq!(xi.to_bits(), s.xi.to_bits());
                assert_eq!(z.re.to_bits(), l.re.to_bits());
                assert_eq!(z.im.to_bits(), l.im.to_bits());
                idx += 1;
            }
        }
        assert_eq!(idx, rows.len());
    }

    #[test]
    fn snapshot_container_roundtrips() {
        let mut f = ExtendedField::zeros(3, 8, 2.0 * std::f64::consts::PI);
        for j in 0..f.total_points() {
            f.vr[j] = C64::new((j as f64).sin(), 0.0);
            f.vi[j] = C64::new((j as f64).cos(), 0.0);
        }
        let dir = tempdir().unwrap();
        let path = dir.path().join("state.snap");
        save_snapshot(&f, &path).unwrap();
        let g = load_snapshot(&path).unwrap();
        assert_eq!(g.m_cells, 3);
        assert_eq!(g.n_per_cell, 8);
        for j in 0..f.total_points() {
            assert_eq!(f.vr[j].re.to_bits(), g.vr[j].re.to_bits());
            assert_eq!(f.vi[j].re.to_bits(), g.vi[j].re.to_bits());
        }
        std::fs::write(&path, b"LLESNAPx").unwrap();
        assert!(matches!(load_snapshot(&path), Err(Error::Parse(_))));
    }
}

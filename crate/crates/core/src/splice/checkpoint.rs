//! Binary checkpoint container.
//!
//! Layout (little-endian): `"SPLC"`, version `u32 = 1`, five `u32` dims
//! `(n_a, n_b, m_za, m_zb, m_s)`, then eight networks in the order
//! `F_A, F_B, F_AtoB, F_BtoA, G_A, G_B, M_AtoB, M_BtoA`. Each network is a
//! layer count `u32`, `count + 1` layer dims as `u32`, an activation tag `u8`
//! (`2` is followed by the leaky slope as `f64`), then per layer the weights
//! (row-major, `out x in`) and the bias as `f64`. An absent network is a layer
//! count of 0 followed by a single dim (its input width). Standardization
//! mean/std vectors follow for view A then view B. Zero or more `"GEOD"`
//! sections close the file: group tag `u8`, landmarks `u32`, samples `u32`,
//! landmark indices as `u32`, then the distance table row-major as `f64`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::GeodesicTable;
use crate::nncore::{Activation, Layer, Matrix, Network};
use crate::scalar::Scalar;
use crate::splice::{LatentGroup, SpliceDims, SpliceModel, Standardizer};

const MAGIC: &[u8; 4] = b"SPLC";
const GEOD: &[u8; 4] = b"GEOD";
const VERSION: u32 = 1;

/// A model together with the geodesic tables computed for it.
#[derive(Clone, Debug)]
pub struct Checkpoint<T> {
    pub model: SpliceModel<T>,
    pub tables: Vec<GeodesicTable<T>>,
}

impl<T: Scalar> PartialEq for Checkpoint<T> {
    fn eq(&self, other: &Self) -> bool {
        self.model == other.model && self.tables == other.tables
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::config(format!("{v} does not fit in u32")))?;
        self.0.extend_from_slice(&v.to_le_bytes());
        Ok(())
    }

    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn floats<T: Scalar>(&mut self, v: &[T]) {
        for &x in v {
            self.f64(x.as_f64());
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::format(self.pos as u64, msg)
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(self.err(format!(
                "truncated while reading {what} ({n} bytes needed, {} left)",
                self.buf.len() - self.pos
            )));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<usize> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()) as usize)
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    fn floats<T: Scalar>(&mut self, n: usize, what: &str) -> Result<Vec<T>> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| self.err(format!("{what} length overflows")))?;
        let raw = self.take(bytes, what)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
            .collect())
    }

    fn at_end(&self) -> bool {
        self.pos == self.buf.len()
    }
}

fn write_net<T: Scalar>(w: &mut Writer, net: Option<&Network<T>>, placeholder_input: usize) -> Result<()> {
    let Some(net) = net else {
        w.u32(0)?;
        return w.u32(placeholder_input);
    };
    w.u32(net.layers().len())?;
    for &d in net.dims() {
        w.u32(d)?;
    }
    let act = net.hidden_activation();
    w.u8(act.tag());
    if let Activation::LeakyRelu(slope) = act {
        w.f64(slope);
    }
    for l in net.layers() {
        w.floats(l.weights.data());
        w.floats(&l.bias);
    }
    Ok(())
}

fn read_net<T: Scalar>(r: &mut Reader<'_>, name: &str, expect: (usize, usize)) -> Result<Option<Network<T>>> {
    let start = r.pos;
    let count = r.u32(name)?;
    if count == 0 {
        let input = r.u32(name)?;
        if input != expect.0 {
            return Err(Error::format(
                start as u64,
                format!("{name} placeholder has input {input}, expected {}", expect.0),
            ));
        }
        return Ok(None);
    }
    let mut dims = Vec::with_capacity(count + 1);
    for _ in 0..=count {
        dims.push(r.u32(name)?);
    }
    if dims[0] != expect.0 || dims[count] != expect.1 || dims.contains(&0) {
        return Err(Error::format(
            start as u64,
            format!("{name} has dims {dims:?}, expected {} -> {}", expect.0, expect.1),
        ));
    }
    let tag_pos = r.pos;
    let act = match r.u8(name)? {
        0 => Activation::Linear,
        1 => Activation::Tanh,
        2 => Activation::LeakyRelu(r.f64(name)?),
        t => return Err(Error::format(tag_pos as u64, format!("unknown activation tag {t}"))),
    };
    let mut layers = Vec::with_capacity(count);
    for w in dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weights = Matrix::from_vec(fan_out, fan_in, r.floats(fan_in * fan_out, name)?)?;
        let bias = r.floats(fan_out, name)?;
        layers.push(Layer { weights, bias });
    }
    let net = Network::from_layers(layers, act).map_err(|e| Error::format(start as u64, e.to_string()))?;
    Ok(Some(net))
}

fn expect_present<T>(net: Option<Network<T>>, name: &str, offset: usize) -> Result<Network<T>> {
    net.ok_or_else(|| Error::format(offset as u64, format!("{name} must not be absent")))
}

/// Serializes a model and its geodesic tables.
pub fn encode_checkpoint<T: Scalar>(model: &SpliceModel<T>, tables: &[GeodesicTable<T>]) -> Result<Vec<u8>> {
    let d = model.dims;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(VERSION as usize)?;
    for v in [d.n_a, d.n_b, d.m_za, d.m_zb, d.m_s] {
        w.u32(v)?;
    }
    write_net(&mut w, model.f_a.as_ref(), d.n_a)?;
    write_net(&mut w, model.f_b.as_ref(), d.n_b)?;
    write_net(&mut w, Some(&model.f_ab), d.n_a)?;
    write_net(&mut w, Some(&model.f_ba), d.n_b)?;
    write_net(&mut w, Some(&model.g_a), d.m_s + d.m_za)?;
    write_net(&mut w, Some(&model.g_b), d.m_s + d.m_zb)?;
    write_net(&mut w, model.m_ab.as_ref(), d.m_za)?;
    write_net(&mut w, model.m_ba.as_ref(), d.m_zb)?;
    for norm in [&model.norm_a, &model.norm_b] {
        w.floats(&norm.mean);
        w.floats(&norm.std);
    }
    for t in tables {
        w.0.extend_from_slice(GEOD);
        w.u8(t.group.tag());
        w.u32(t.landmarks.len())?;
        w.u32(t.n_samples())?;
        for &l in &t.landmarks {
            w.u32(l)?;
        }
        w.floats(t.distances.data());
    }
    Ok(w.0)
}

/// Parses a checkpoint. Any inconsistency yields a format error carrying the
/// byte offset; no partially decoded model is returned.
pub fn decode_checkpoint<T: Scalar>(buf: &[u8]) -> Result<Checkpoint<T>> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"SPLC\""));
    }
    let version = r.u32("version")?;
    if version != VERSION as usize {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let mut v = [0usize; 5];
    for x in v.iter_mut() {
        *x = r.u32("dims")?;
    }
    let dims = SpliceDims {
        n_a: v[0],
        n_b: v[1],
        m_za: v[2],
        m_zb: v[3],
        m_s: v[4],
    };
    dims.validate().map_err(|e| Error::format(8, e.to_string()))?;
    let d = dims;
    let f_a = read_net(&mut r, "F_A", (d.n_a, d.m_za))?;
    let f_b = read_net(&mut r, "F_B", (d.n_b, d.m_zb))?;
    let pos = r.pos;
    let f_ab = expect_present(read_net(&mut r, "F_AtoB", (d.n_a, d.m_s))?, "F_AtoB", pos)?;
    let pos = r.pos;
    let f_ba = expect_present(read_net(&mut r, "F_BtoA", (d.n_b, d.m_s))?, "F_BtoA", pos)?;
    let pos = r.pos;
    let g_a = expect_present(read_net(&mut r, "G_A", (d.m_s + d.m_za, d.n_a))?, "G_A", pos)?;
    let pos = r.pos;
    let g_b = expect_present(read_net(&mut r, "G_B", (d.m_s + d.m_zb, d.n_b))?, "G_B", pos)?;
    let m_ab = read_net(&mut r, "M_AtoB", (d.m_za, d.n_b))?;
    let m_ba = read_net(&mut r, "M_BtoA", (d.m_zb, d.n_a))?;
    let presence = [
        (f_a.is_some(), d.m_za > 0, "F_A"),
        (f_b.is_some(), d.m_zb > 0, "F_B"),
        (m_ab.is_some(), d.m_za > 0, "M_AtoB"),
        (m_ba.is_some(), d.m_zb > 0, "M_BtoA"),
    ];
    for (present, wanted, name) in presence {
        if present != wanted {
            return Err(r.err(format!("{name} presence does not match the private width")));
        }
    }
    let mut norms = Vec::with_capacity(2);
    for n in [d.n_a, d.n_b] {
        let mean = r.floats::<f64>(n, "standardization mean")?;
        let std = r.floats::<f64>(n, "standardization std")?;
        norms.push(Standardizer { mean, std });
    }
    let norm_b = norms.pop().unwrap();
    let norm_a = norms.pop().unwrap();

    let mut tables = Vec::new();
    while !r.at_end() {
        let start = r.pos;
        if r.take(4, "section tag")? != GEOD {
            return Err(Error::format(start as u64, "unknown section tag"));
        }
        let tag_pos = r.pos;
        let group = LatentGroup::from_tag(r.u8("group tag")?)
            .ok_or_else(|| Error::format(tag_pos as u64, "unknown latent group tag"))?;
        let l = r.u32("landmark count")?;
        let n = r.u32("sample count")?;
        let mut landmarks = Vec::with_capacity(l);
        for _ in 0..l {
            let idx = r.u32("landmark index")?;
            if idx >= n {
                return Err(r.err(format!("landmark {idx} out of range for {n} samples")));
            }
            landmarks.push(idx);
        }
        let distances = Matrix::from_vec(l, n, r.floats(l.saturating_mul(n), "geodesic table")?)?;
        tables.push(GeodesicTable {
            group,
            landmarks,
            distances,
        });
    }

    Ok(Checkpoint {
        model: SpliceModel {
            dims,
            f_a,
            f_b,
            f_ab,
            f_ba,
            g_a,
            g_b,
            m_ab,
            m_ba,
            norm_a,
            norm_b,
        },
        tables,
    })
}

pub fn save_checkpoint<T: Scalar>(
    path: impl AsRef<Path>,
    model: &SpliceModel<T>,
    tables: &[GeodesicTable<T>],
) -> Result<()> {
    let bytes = encode_checkpoint(model, tables)?;
    let path = path.as_ref();
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(path: impl AsRef<Path>) -> Result<Checkpoint<T>> {
    decode_checkpoint(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splice::Architecture;

    fn model(m_za: usize) -> SpliceModel<f64> {
        let dims = SpliceDims {
            n_a: 5,
            n_b: 4,
            m_za,
            m_zb: 2,
            m_s: 3,
        };
        SpliceModel::new(dims, &Architecture::uniform(&[6, 5]), 11).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let mut m = model(2);
        m.norm_a.mean[1] = 0.25;
        m.norm_b.std[3] = 3.5;
        let table = GeodesicTable {
            group: LatentGroup::PrivateB,
            landmarks: vec![2, 0],
            distances: Matrix::from_fn(2, 4, |r, c| (r * 4 + c) as f64 * 0.5),
        };
        let bytes = encode_checkpoint(&m, std::slice::from_ref(&table)).unwrap();
        let back = decode_checkpoint::<f64>(&bytes).unwrap();
        assert_eq!(back.model, m);
        assert_eq!(back.tables, vec![table]);
    }

    #[test]
    fn bad_magic_and_version() {
        let bytes = encode_checkpoint(&model(2), &[]).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            decode_checkpoint::<f64>(&bad),
            Err(Error::Format { offset: 0, .. })
        ));
        let mut bad = bytes;
        bad[4] = 9;
        assert!(matches!(
            decode_checkpoint::<f64>(&bad),
            Err(Error::Format { offset: 4, .. })
        ));
    }

    #[test]
    fn every_truncation_fails() {
        let bytes = encode_checkpoint(&model(0), &[]).unwrap();
        for cut in (0..bytes.len()).step_by(7) {
            let r = decode_checkpoint::<f64>(&bytes[..cut]);
            assert!(matches!(r, Err(Error::Format { .. })), "cut at {cut}");
        }
    }

    #[test]
    fn zero_width_private_uses_placeholder() {
        let m = model(0);
        let bytes = encode_checkpoint(&m, &[]).unwrap();
        // F_A placeholder: count 0 then input width 5.
        assert_eq!(&bytes[28..32], &0u32.to_le_bytes());
        assert_eq!(&bytes[32..36], &5u32.to_le_bytes());
        let back = decode_checkpoint::<f64>(&bytes).unwrap();
        assert!(back.model.f_a.is_none() && back.model.m_ab.is_none());
        assert_eq!(back.model, m);
    }
}

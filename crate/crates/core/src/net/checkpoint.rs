//! Binary parameter checkpoints. The layout is documented in
//! `docs/checkpoint.md`; all integers and floats are little-endian.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::scalar::Scalar;

use super::adam::{AdamConfig, AdamState, Moments};
use super::conv::ConvLayer;
use super::dense::DenseLayer;
use super::network::{Architecture, ConvSpec, Network};
use super::NetError;

pub const MAGIC: &[u8; 8] = b"MORAINET";
pub const FORMAT_VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> NetError {
    NetError::Checkpoint(e.to_string())
}

struct Writer<W: Write> {
    inner: W,
    buf: Vec<u8>,
}

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<(), NetError> {
        self.inner.write_all(&[v]).map_err(io_err)
    }

    fn u32(&mut self, v: usize) -> Result<(), NetError> {
        let v = u32::try_from(v).map_err(|_| NetError::Checkpoint("dimension exceeds u32".into()))?;
        self.inner.write_all(&v.to_le_bytes()).map_err(io_err)
    }

    fn u64(&mut self, v: u64) -> Result<(), NetError> {
        self.inner.write_all(&v.to_le_bytes()).map_err(io_err)
    }

    fn scalars<T: Scalar>(&mut self, vals: &[T]) -> Result<(), NetError> {
        self.buf.clear();
        for &v in vals {
            v.write_le(&mut self.buf);
        }
        self.inner.write_all(&self.buf).map_err(io_err)
    }
}

struct Reader<R: Read> {
    inner: R,
    buf: Vec<u8>,
}

impl<R: Read> Reader<R> {
    fn exact(&mut self, n: usize) -> Result<&[u8], NetError> {
        self.buf.resize(n, 0);
        self.inner.read_exact(&mut self.buf).map_err(|e| NetError::Checkpoint(format!("truncated file: {e}")))?;
        Ok(&self.buf)
    }

    fn u8(&mut self) -> Result<u8, NetError> {
        Ok(self.exact(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, NetError> {
        Ok(u32::from_le_bytes(self.exact(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64, NetError> {
        Ok(u64::from_le_bytes(self.exact(8)?.try_into().expect("8 bytes")))
    }

    fn scalars<T: Scalar>(&mut self, n: usize) -> Result<Vec<T>, NetError> {
        let bytes = self.exact(n * T::BYTES)?;
        Ok(bytes.chunks_exact(T::BYTES).map(T::read_le).collect())
    }

    fn scalar<T: Scalar>(&mut self) -> Result<T, NetError> {
        Ok(self.scalars::<T>(1)?[0])
    }
}

pub fn write_checkpoint<T: Scalar, W: Write>(out: W, net: &Network<T>, adam: &AdamState<T>) -> Result<(), NetError> {
    let mut w = Writer { inner: out, buf: Vec::new() };
    w.inner.write_all(MAGIC).map_err(io_err)?;
    w.u32(FORMAT_VERSION as usize)?;
    w.u8(T::BYTES as u8)?;

    let arch = net.architecture();
    w.u32(arch.width)?;
    w.u32(arch.height)?;
    w.u32(arch.in_channels)?;
    w.u32(arch.out_channels)?;
    w.u32(arch.conv.len())?;
    for c in &arch.conv {
        w.u32(c.filters)?;
        w.u32(c.size)?;
    }
    w.scalars(&[net.alpha()])?;

    for layer in net.conv_layers() {
        w.scalars(layer.weights())?;
        w.scalars(layer.biases())?;
    }
    let dense = net.dense();
    for r in 0..dense.out_dim() {
        w.scalars(dense.row(r))?;
    }
    w.scalars(dense.biases())?;

    let cfg = adam.config();
    w.u64(adam.step_count())?;
    w.scalars(&[cfg.lr, cfg.beta1, cfg.beta2, cfg.epsilon])?;
    let (cw, cb) = adam.conv_moments();
    for (mw, mb) in cw.iter().zip(cb) {
        for m in [mw, mb] {
            w.scalars(&m.first)?;
            w.scalars(&m.second)?;
        }
    }
    let bias = adam.dense_bias_moments();
    w.scalars(&bias.first)?;
    w.scalars(&bias.second)?;
    let rows = adam.dense_row_moments();
    w.u32(rows.iter().filter(|r| r.is_some()).count())?;
    for (r, m) in rows.iter().enumerate() {
        if let Some(m) = m {
            w.u32(r)?;
            w.scalars(&m.first)?;
            w.scalars(&m.second)?;
        }
    }
    w.inner.flush().map_err(io_err)
}

pub fn read_checkpoint<T: Scalar, R: Read>(input: R) -> Result<(Network<T>, AdamState<T>), NetError> {
    let mut r = Reader { inner: input, buf: Vec::new() };
    if r.exact(8)? != MAGIC {
        return Err(NetError::Checkpoint("not a network checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION as usize {
        return Err(NetError::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let bytes = r.u8()? as usize;
    if bytes != T::BYTES {
        return Err(NetError::Checkpoint(format!("checkpoint stores {bytes}-byte scalars, expected {}", T::BYTES)));
    }

    let width = r.u32()?;
    let height = r.u32()?;
    let in_channels = r.u32()?;
    let out_channels = r.u32()?;
    let n_conv = r.u32()?;
    if n_conv == 0 || n_conv > 64 {
        return Err(NetError::Checkpoint(format!("implausible conv layer count {n_conv}")));
    }
    let mut conv_specs = Vec::with_capacity(n_conv);
    for _ in 0..n_conv {
        conv_specs.push(ConvSpec { filters: r.u32()?, size: r.u32()? });
    }
    let arch = Architecture { width, height, in_channels, conv: conv_specs, out_channels };
    let alpha = r.scalar::<T>()?;

    let mut conv = Vec::with_capacity(n_conv);
    let mut cin = in_channels;
    for spec in &arch.conv {
        let mut layer = ConvLayer::zeros(spec.filters, spec.size, cin);
        let n = layer.weights().len();
        layer.weights_mut().copy_from_slice(&r.scalars::<T>(n)?);
        layer.biases_mut().copy_from_slice(&r.scalars::<T>(spec.filters)?);
        conv.push(layer);
        cin = spec.filters;
    }
    let (din, dout) = (arch.dense_in(), arch.dense_out());
    let mut rows = Vec::with_capacity(dout);
    for _ in 0..dout {
        rows.push(r.scalars::<T>(din)?);
    }
    let biases = r.scalars::<T>(dout)?;
    let dense = DenseLayer::from_rows(din, rows, biases).expect("row sizes match");
    let net = Network::from_parts(arch, alpha, conv, dense)?;

    let step = r.u64()?;
    let hp = r.scalars::<T>(4)?;
    let config = AdamConfig { lr: hp[0], beta1: hp[1], beta2: hp[2], epsilon: hp[3] };
    let mut conv_w = Vec::new();
    let mut conv_b = Vec::new();
    for layer in net.conv_layers() {
        let n = layer.weights().len();
        conv_w.push(Moments { first: r.scalars(n)?, second: r.scalars(n)? });
        let f = layer.filters();
        conv_b.push(Moments { first: r.scalars(f)?, second: r.scalars(f)? });
    }
    let dense_bias = Moments { first: r.scalars(dout)?, second: r.scalars(dout)? };
    let mut dense_rows: Vec<Option<Arc<Moments<T>>>> = vec![None; dout];
    let count = r.u32()?;
    for _ in 0..count {
        let row = r.u32()?;
        if row >= dout {
            return Err(NetError::Checkpoint(format!("moment row {row} out of range")));
        }
        dense_rows[row] = Some(Arc::new(Moments { first: r.scalars(din)?, second: r.scalars(din)? }));
    }
    let adam = AdamState::from_parts(step, config, conv_w, conv_b, dense_rows, dense_bias);
    Ok((net, adam))
}

pub fn save_checkpoint<T: Scalar>(path: &Path, net: &Network<T>, adam: &AdamState<T>) -> Result<(), NetError> {
    let file = File::create(path).map_err(io_err)?;
    write_checkpoint(BufWriter::with_capacity(1 << 20, file), net, adam)
}

/// Loads a checkpoint and checks it against the expected architecture.
pub fn load_checkpoint<T: Scalar>(
    path: &Path,
    expected: &Architecture,
) -> Result<(Network<T>, AdamState<T>), NetError> {
    let file = File::open(path).map_err(io_err)?;
    let (net, adam) = read_checkpoint(BufReader::with_capacity(1 << 20, file))?;
    if net.architecture() != expected {
        return Err(NetError::ShapeMismatch {
            expected: format!("{expected:?}"),
            got: format!("{:?}", net.architecture()),
        });
    }
    Ok((net, adam))
}

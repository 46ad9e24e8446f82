//! Chunked little-endian binary files for records, segment sets, feature sets and
//! trained models. Layout: 8-byte magic, `u32` version, then chunks of
//! `[4-byte tag][u64 payload length][payload]`. See `docs/FORMATS.md`.

use crate::error::{Error, Result};
use crate::features::{FeatureSet, NormalizationStats, Representation};
use crate::ingest::{EcgRecord, SeizureAnnotation, SeizureType};
use crate::models::{build, ArchitectureKind, Hyper, TrainPlan, TrainedModel};
use crate::preprocess::{Phase, Segment, SegmentSet, SegmentationConfig};

pub const VERSION: u32 = 1;
pub const RECORD_MAGIC: &[u8; 8] = b"ECGSZREC";
pub const SEGMENTS_MAGIC: &[u8; 8] = b"ECGSZSEG";
pub const FEATURES_MAGIC: &[u8; 8] = b"ECGSZFEA";
pub const MODEL_MAGIC: &[u8; 8] = b"ECGSZMDL";

#[derive(Default)]
struct Buf(Vec<u8>);

impl Buf {
    fn u8(&mut self, v: u8) -> &mut Self {
        self.0.push(v);
        self
    }
    fn u32(&mut self, v: u32) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    fn u64(&mut self, v: u64) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    fn usize(&mut self, v: usize) -> &mut Self {
        self.u64(v as u64)
    }
    fn f64(&mut self, v: f64) -> &mut Self {
        self.0.extend_from_slice(&v.to_le_bytes());
        self
    }
    fn f64s(&mut self, v: &[f64]) -> &mut Self {
        self.0.reserve(8 * v.len());
        for x in v {
            self.f64(*x);
        }
        self
    }
    fn str(&mut self, s: &str) -> &mut Self {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
        self
    }
}

struct Writer {
    out: Vec<u8>,
}

impl Writer {
    fn new(magic: &[u8; 8]) -> Self {
        let mut out = magic.to_vec();
        out.extend_from_slice(&VERSION.to_le_bytes());
        Self { out }
    }

    fn chunk(&mut self, tag: &[u8; 4], payload: Buf) {
        self.out.extend_from_slice(tag);
        self.out.extend_from_slice(&(payload.0.len() as u64).to_le_bytes());
        self.out.extend_from_slice(&payload.0);
    }
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len()).ok_or_else(|| {
            Error::Cache(format!("{} chunk ends early (need {n} bytes at offset {})", self.what, self.pos))
        })?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Cache("length overflows usize".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Cache("length overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Cache(format!("{} holds invalid UTF-8", self.what)))
    }
    fn done(&self) -> Result<()> {
        if self.pos != self.data.len() {
            return Err(Error::Cache(format!(
                "{} chunk has {} trailing bytes",
                self.what,
                self.data.len() - self.pos
            )));
        }
        Ok(())
    }
}

struct Chunks<'a> {
    chunks: Vec<([u8; 4], &'a [u8])>,
}

impl<'a> Chunks<'a> {
    fn parse(bytes: &'a [u8], magic: &[u8; 8]) -> Result<Self> {
        if bytes.len() < 12 || &bytes[..8] != magic {
            return Err(Error::Cache(format!(
                "not a {} file (bad magic)",
                String::from_utf8_lossy(magic)
            )));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != VERSION {
            return Err(Error::Cache(format!("unsupported version {version}, expected {VERSION}")));
        }
        let mut chunks = Vec::new();
        let mut pos = 12;
        while pos < bytes.len() {
            if pos + 12 > bytes.len() {
                return Err(Error::Cache(format!("truncated chunk header at offset {pos}")));
            }
            let tag: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
            let len = u64::from_le_bytes(bytes[pos + 4..pos + 12].try_into().unwrap()) as usize;
            let start = pos + 12;
            let end = start
                .checked_add(len)
                .filter(|&e| e <= bytes.len())
                .ok_or_else(|| Error::Cache(format!("chunk {} truncated", String::from_utf8_lossy(&tag))))?;
            chunks.push((tag, &bytes[start..end]));
            pos = end;
        }
        Ok(Self { chunks })
    }

    fn get(&self, tag: &[u8; 4], what: &'static str) -> Result<Cursor<'a>> {
        self.chunks
            .iter()
            .find(|(t, _)| t == tag)
            .map(|(_, d)| Cursor { data: d, pos: 0, what })
            .ok_or_else(|| Error::Cache(format!("missing {} chunk", String::from_utf8_lossy(tag))))
    }
}

fn seizure_code(t: SeizureType) -> u8 {
    match t {
        SeizureType::Ias => 0,
        SeizureType::Wias => 1,
        SeizureType::Fbtc => 2,
        SeizureType::Other => 3,
    }
}

fn seizure_from(code: u8) -> Result<SeizureType> {
    [SeizureType::Ias, SeizureType::Wias, SeizureType::Fbtc, SeizureType::Other]
        .get(code as usize)
        .copied()
        .ok_or_else(|| Error::Cache(format!("unknown seizure type code {code}")))
}

pub fn encode_record(r: &EcgRecord) -> Vec<u8> {
    let mut w = Writer::new(RECORD_MAGIC);
    let mut meta = Buf::default();
    meta.u32(r.sampling_rate_hz()).str(r.patient_id()).usize(r.len());
    w.chunk(b"META", meta);
    let mut ann = Buf::default();
    ann.usize(r.annotations().len());
    for a in r.annotations() {
        ann.f64(a.onset_s).f64(a.offset_s).u8(seizure_code(a.seizure_type));
    }
    w.chunk(b"ANNO", ann);
    let mut s = Buf::default();
    s.f64s(r.samples());
    w.chunk(b"SAMP", s);
    w.out
}

pub fn decode_record(bytes: &[u8]) -> Result<EcgRecord> {
    let c = Chunks::parse(bytes, RECORD_MAGIC)?;
    let mut meta = c.get(b"META", "META")?;
    let fs = meta.u32()?;
    let id = meta.str()?;
    let n = meta.usize()?;
    meta.done()?;
    let mut ann = c.get(b"ANNO", "ANNO")?;
    let count = ann.usize()?;
    let mut annotations = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let (on, off, t) = (ann.f64()?, ann.f64()?, ann.u8()?);
        annotations.push(SeizureAnnotation::new(on, off, seizure_from(t)?)?);
    }
    ann.done()?;
    let mut s = c.get(b"SAMP", "SAMP")?;
    let samples = s.f64s(n)?;
    s.done()?;
    EcgRecord::new(id, fs, samples)?.with_annotations(annotations)
}

pub fn encode_segments(set: &SegmentSet) -> Vec<u8> {
    let mut w = Writer::new(SEGMENTS_MAGIC);
    let cfg = set.config;
    let mut head = Buf::default();
    head.u32(cfg.sampling_rate_hz)
        .u32(cfg.window_s)
        .u32(cfg.overlap_s)
        .usize(cfg.window_samples())
        .usize(cfg.hop_samples())
        .usize(set.len())
        .usize(set.record_len);
    w.chunk(b"SHDR", head);
    let mut idx = Buf::default();
    for s in &set.segments {
        idx.usize(s.start_sample).u8(s.phase.code());
    }
    w.chunk(b"SIDX", idx);
    let mut data = Buf::default();
    for s in &set.segments {
        data.f64s(&s.samples);
    }
    w.chunk(b"SAMP", data);
    w.out
}

pub fn decode_segments(bytes: &[u8]) -> Result<SegmentSet> {
    let c = Chunks::parse(bytes, SEGMENTS_MAGIC)?;
    let mut h = c.get(b"SHDR", "SHDR")?;
    let fs = h.u32()?;
    let window_s = h.u32()?;
    let overlap_s = h.u32()?;
    let config = SegmentationConfig::new(window_s, overlap_s, fs)
        .map_err(|e| Error::Cache(format!("bad segmentation header: {e}")))?;
    let (w, hop, count, record_len) = (h.usize()?, h.usize()?, h.usize()?, h.usize()?);
    h.done()?;
    if w != config.window_samples() || hop != config.hop_samples() {
        return Err(Error::Cache("window or hop inconsistent with the header seconds".into()));
    }
    let mut idx = c.get(b"SIDX", "SIDX")?;
    let mut data = c.get(b"SAMP", "SAMP")?;
    let mut segments = Vec::with_capacity(count.min(1 << 20));
    for index in 0..count {
        let start_sample = idx.usize()?;
        let phase = Phase::from_code(idx.u8()?).ok_or_else(|| Error::Cache("unknown phase code".into()))?;
        segments.push(Segment {
            index,
            start_sample,
            samples: data.f64s(w)?,
            phase,
        });
    }
    idx.done()?;
    data.done()?;
    Ok(SegmentSet {
        config,
        record_len,
        segments,
    })
}

pub fn encode_features(set: &FeatureSet) -> Vec<u8> {
    let mut w = Writer::new(FEATURES_MAGIC);
    let mut head = Buf::default();
    head.u8(set.representation.code())
        .usize(set.steps)
        .usize(set.features)
        .usize(set.len())
        .str("f64le");
    w.chunk(b"FHDR", head);
    let mut data = Buf::default();
    for f in &set.data {
        data.f64s(f);
    }
    w.chunk(b"DATA", data);
    w.out
}

pub fn decode_features(bytes: &[u8]) -> Result<FeatureSet> {
    let c = Chunks::parse(bytes, FEATURES_MAGIC)?;
    let mut h = c.get(b"FHDR", "FHDR")?;
    let representation =
        Representation::from_code(h.u8()?).ok_or_else(|| Error::Cache("unknown representation code".into()))?;
    let (steps, features, count) = (h.usize()?, h.usize()?, h.usize()?);
    let dtype = h.str()?;
    h.done()?;
    if dtype != "f64le" {
        return Err(Error::Cache(format!("unsupported dtype {dtype:?}")));
    }
    let mut d = c.get(b"DATA", "DATA")?;
    let data = (0..count).map(|_| d.f64s(steps * features)).collect::<Result<Vec<_>>>()?;
    d.done()?;
    Ok(FeatureSet {
        representation,
        steps,
        features,
        data,
    })
}

pub fn encode_model(m: &TrainedModel) -> Vec<u8> {
    let mut w = Writer::new(MODEL_MAGIC);
    let s = &m.spec;
    let h = &s.hyper;
    let mut arch = Buf::default();
    arch.u8(s.kind.code())
        .u8(s.representation.code())
        .usize(s.steps)
        .usize(s.features)
        .usize(h.lstm_hidden)
        .usize(h.latent)
        .usize(h.conv_channels)
        .usize(h.heads)
        .usize(h.d_model)
        .usize(h.ff_inner)
        .usize(h.encoder_layers)
        .f64(h.dropout);
    w.chunk(b"ARCH", arch);
    let mut norm = Buf::default();
    norm.usize(m.stats.dims()).f64s(&m.stats.mean).f64s(&m.stats.std);
    w.chunk(b"NORM", norm);
    let state = m.net.state();
    let mut shapes = Buf::default();
    shapes.usize(state.len());
    for t in &state {
        shapes.str(&t.name).u8(t.shape.len() as u8);
        for &d in &t.shape {
            shapes.usize(d);
        }
    }
    w.chunk(b"SHPS", shapes);
    let mut params = Buf::default();
    for t in &state {
        params.f64s(t.value);
    }
    w.chunk(b"PARM", params);
    let p = &m.plan;
    let mut trng = Buf::default();
    trng.usize(p.epochs)
        .usize(p.batch_size)
        .usize(p.patience)
        .f64(p.min_delta)
        .f64(p.lr)
        .u64(p.seed)
        .f64(m.initial_loss)
        .f64(m.final_loss)
        .usize(m.best_epoch)
        .usize(m.epoch_losses.len())
        .f64s(&m.epoch_losses);
    w.chunk(b"TRNG", trng);
    w.out
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    let c = Chunks::parse(bytes, MODEL_MAGIC)?;
    let mut a = c.get(b"ARCH", "ARCH")?;
    let kind = ArchitectureKind::from_code(a.u8()?).ok_or_else(|| Error::Cache("unknown architecture code".into()))?;
    let representation =
        Representation::from_code(a.u8()?).ok_or_else(|| Error::Cache("unknown representation code".into()))?;
    let (steps, features) = (a.usize()?, a.usize()?);
    let hyper = Hyper {
        lstm_hidden: a.usize()?,
        latent: a.usize()?,
        conv_channels: a.usize()?,
        heads: a.usize()?,
        d_model: a.usize()?,
        ff_inner: a.usize()?,
        encoder_layers: a.usize()?,
        dropout: a.f64()?,
    };
    a.done()?;
    let spec = build(kind, representation, steps, features, hyper)?;
    let mut n = c.get(b"NORM", "NORM")?;
    let dims = n.usize()?;
    let stats = NormalizationStats {
        mean: n.f64s(dims)?,
        std: n.f64s(dims)?,
    };
    n.done()?;
    let mut net = spec.instantiate(&mut preictal_nn::Rng::new(0))?;
    let mut shapes = c.get(b"SHPS", "SHPS")?;
    let mut params = c.get(b"PARM", "PARM")?;
    let count = shapes.usize()?;
    let mut state = net.state_mut();
    if count != state.len() {
        return Err(Error::Cache(format!(
            "file holds {count} tensors, architecture has {}",
            state.len()
        )));
    }
    for t in state.iter_mut() {
        let name = shapes.str()?;
        let ndim = shapes.u8()? as usize;
        let shape = (0..ndim).map(|_| shapes.usize()).collect::<Result<Vec<_>>>()?;
        if name != t.name || shape != t.shape {
            return Err(Error::Cache(format!(
                "tensor {name} {shape:?} does not match architecture tensor {} {:?}",
                t.name, t.shape
            )));
        }
        let len = t.value.len();
        *t.value = params.f64s(len)?;
    }
    drop(state);
    shapes.done()?;
    params.done()?;
    let mut tr = c.get(b"TRNG", "TRNG")?;
    let plan = TrainPlan {
        epochs: tr.usize()?,
        batch_size: tr.usize()?,
        patience: tr.usize()?,
        min_delta: tr.f64()?,
        lr: tr.f64()?,
        seed: tr.u64()?,
    };
    let (initial_loss, final_loss, best_epoch) = (tr.f64()?, tr.f64()?, tr.usize()?);
    let hist_len = tr.usize()?;
    let epoch_losses = tr.f64s(hist_len)?;
    tr.done()?;
    Ok(TrainedModel {
        spec,
        net,
        stats,
        epoch_losses,
        initial_loss,
        final_loss,
        best_epoch,
        plan,
    })
}

//! NMM1 model containers.
//!
//! ```text
//! "NMM1" | version u16 | section count u32
//! per section: kind u8 (0 text, 1 NMT1) | name length u16 | name
//!              | payload length u64 | payload
//! CRC-32 of every preceding byte (u32)
//! ```
//!
//! Sections written: `config` (canonical `key=value` text), `meta`,
//! `trace`, `weights`, `gds/{pos}/eigvecs`, `gds/{pos}/eigvals`,
//! `ref/{i}/{pos}` and `karcher/{j}/{pos}`, where `pos` indexes the
//! selected modes. Every matrix is an NMT1 payload, so reloading is
//! bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fisher::{nmode_fisher, FisherReport, NModeFisher};
use crate::gds::GdsBasis;
use crate::manifold::{ProductPoint, WeightVector};
use crate::pipeline::{PipelineConfig, SearchStep, TrainedModel};
use crate::subspace::Subspace;

use super::{decode_tensor, encode_tensor, matrix_to_tensor, read_file, tensor_to_matrix, write_atomic};

pub const MODEL_MAGIC: &[u8; 4] = b"NMM1";
pub const MODEL_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Section {
    Text(String),
    Matrix(DMatrix<f64>),
}

pub fn encode_sections(sections: &[(String, Section)]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.extend_from_slice(&(sections.len() as u32).to_le_bytes());
    for (name, s) in sections {
        let (kind, payload) = match s {
            Section::Text(t) => (0u8, t.as_bytes().to_vec()),
            Section::Matrix(m) => (1u8, encode_tensor(&matrix_to_tensor(m)?)),
        };
        let name_len = u16::try_from(name.len()).map_err(|_| Error::Config(format!("section name too long: {name}")))?;
        out.push(kind);
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&payload);
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn decode_sections(bytes: &[u8]) -> Result<BTreeMap<String, Section>> {
    if let Some(off) = (0..4).find(|&i| bytes.get(i) != Some(&MODEL_MAGIC[i])) {
        if off >= bytes.len() {
            return Err(Error::Truncated(format!("{} bytes cannot hold a model header", bytes.len())));
        }
        return Err(Error::Format {
            offset: off as u64,
            message: "bad magic, expected NMM1".into(),
        });
    }
    if bytes.len() < 14 {
        return Err(Error::Truncated(format!("{} bytes cannot hold a model header", bytes.len())));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(Error::Version {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let body = &bytes[..bytes.len() - 4];
    let stored = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4-byte slice"));
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    let mut r = Reader { buf: body, at: 6 };
    let count = u32::from_le_bytes(r.take(4)?.try_into().expect("4-byte slice"));
    let mut out = BTreeMap::new();
    for _ in 0..count {
        let kind_at = r.at;
        let kind = r.take(1)?[0];
        let name_len = u16::from_le_bytes(r.take(2)?.try_into().expect("2-byte slice")) as usize;
        let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| r.error("section name is not UTF-8"))?;
        let len = u64::from_le_bytes(r.take(8)?.try_into().expect("8-byte slice"));
        let len = usize::try_from(len).map_err(|_| r.error("section too large"))?;
        let payload = r.take(len)?;
        let section = match kind {
            0 => Section::Text(String::from_utf8(payload.to_vec()).map_err(|_| r.error("text section is not UTF-8"))?),
            1 => Section::Matrix(tensor_to_matrix(&decode_tensor(payload)?)?),
            k => {
                return Err(Error::Format {
                    offset: kind_at as u64,
                    message: format!("unknown section kind {k}"),
                })
            }
        };
        if out.insert(name.clone(), section).is_some() {
            return Err(r.error(&format!("duplicate section {name}")));
        }
    }
    if r.at != body.len() {
        return Err(r.error("trailing bytes after the last section"));
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Truncated(format!("section data ends early at byte {}", self.at))
        })?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn error(&self, msg: &str) -> Error {
        Error::Format {
            offset: self.at as u64,
            message: msg.into(),
        }
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn fisher_text(f: &NModeFisher) -> String {
    f.per_mode
        .iter()
        .map(|r| format!("{}:{:?}:{:?}", r.mode, r.between, r.within))
        .collect::<Vec<_>>()
        .join(";")
}

fn meta_text(model: &TrainedModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tensor_dims={}", join(&model.tensor_dims));
    let _ = writeln!(s, "mode_ambient={}", join(&model.mode_ambient));
    let _ = writeln!(s, "mode_dims={}", join(&model.mode_dims));
    let _ = writeln!(s, "angle_counts={}", join(&model.angle_counts));
    for name in &model.class_names {
        let _ = writeln!(s, "class={name}");
    }
    let _ = writeln!(s, "references={}", model.references.len());
    let labels: Vec<usize> = model.references.iter().map(|r| r.label.unwrap_or(0)).collect();
    let _ = writeln!(s, "ref_labels={}", join(&labels));
    let gds = match &model.gds {
        None => "none".to_string(),
        Some(g) => g.iter().map(|b| format!("{}:{}:{}", b.mode, b.alpha, b.beta)).collect::<Vec<_>>().join(","),
    };
    let _ = writeln!(s, "gds={gds}");
    let _ = writeln!(s, "fisher_raw={}", fisher_text(&model.fisher_raw));
    let _ = writeln!(s, "fisher={}", fisher_text(&model.fisher));
    let angles = match &model.class_angles {
        None => "none".to_string(),
        Some(a) => a.iter().map(|(b, c)| format!("{b:?}:{c:?}")).collect::<Vec<_>>().join(";"),
    };
    let _ = writeln!(s, "class_angles={angles}");
    s
}

fn trace_text(trace: &[SearchStep]) -> String {
    let mut s = String::new();
    for t in trace {
        let ranges = t.ranges.iter().map(|(a, b)| format!("{a}:{b}")).collect::<Vec<_>>().join(";");
        let score = t.score.map_or("none".to_string(), |v| format!("{v:?}"));
        let _ = writeln!(s, "{},{},{},{}", t.round, t.mode_pos, ranges, score);
    }
    s
}

pub fn encode_model(model: &TrainedModel) -> Result<Vec<u8>> {
    let mut sections = vec![
        ("config".to_string(), Section::Text(model.config.to_text())),
        ("meta".to_string(), Section::Text(meta_text(model))),
        ("trace".to_string(), Section::Text(trace_text(&model.search_trace))),
        (
            "weights".to_string(),
            Section::Matrix(DMatrix::from_column_slice(model.weights.len(), 1, &model.weights.weights)),
        ),
    ];
    if let Some(gds) = &model.gds {
        for (pos, g) in gds.iter().enumerate() {
            sections.push((format!("gds/{pos}/eigvecs"), Section::Matrix(g.eigvecs.clone())));
            sections.push((
                format!("gds/{pos}/eigvals"),
                Section::Matrix(DMatrix::from_column_slice(g.eigvals.len(), 1, g.eigvals.as_slice())),
            ));
        }
    }
    for (i, r) in model.references.iter().enumerate() {
        for (pos, p) in r.parts.iter().enumerate() {
            sections.push((format!("ref/{i}/{pos}"), Section::Matrix(p.basis().clone())));
        }
    }
    for (j, c) in model.class_means.iter().enumerate() {
        for (pos, p) in c.parts.iter().enumerate() {
            sections.push((format!("karcher/{j}/{pos}"), Section::Matrix(p.basis().clone())));
        }
    }
    encode_sections(&sections)
}

struct Sections(BTreeMap<String, Section>);

impl Sections {
    fn text(&self, name: &str) -> Result<&str> {
        match self.0.get(name) {
            Some(Section::Text(t)) => Ok(t),
            Some(_) => Err(Error::Manifest(format!("model section {name} should be text"))),
            None => Err(Error::Manifest(format!("model lacks section {name}"))),
        }
    }

    fn matrix(&self, name: &str) -> Result<&DMatrix<f64>> {
        match self.0.get(name) {
            Some(Section::Matrix(m)) => Ok(m),
            Some(_) => Err(Error::Manifest(format!("model section {name} should be a matrix"))),
            None => Err(Error::Manifest(format!("model lacks section {name}"))),
        }
    }
}

fn bad_meta(msg: impl Into<String>) -> Error {
    Error::Manifest(format!("model metadata: {}", msg.into()))
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>> {
    if v.is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad_meta(format!("bad list item `{s}`"))))
        .collect()
}

fn parse_fisher(v: &str) -> Result<NModeFisher> {
    let reports = v
        .split(';')
        .map(|r| {
            let f: Vec<&str> = r.split(':').collect();
            let [mode, b, w] = f[..] else {
                return Err(bad_meta(format!("bad Fisher entry `{r}`")));
            };
            let num = |s: &str| s.parse::<f64>().map_err(|_| bad_meta(format!("bad number `{s}`")));
            let mode = mode.parse().map_err(|_| bad_meta(format!("bad mode `{mode}`")))?;
            Ok(FisherReport::from_terms(mode, num(b)?, num(w)?))
        })
        .collect::<Result<Vec<_>>>()?;
    nmode_fisher(&reports)
}

fn parse_trace(text: &str) -> Result<Vec<SearchStep>> {
    text.lines()
        .filter(|l| !l.is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let [round, pos, ranges, score] = f[..] else {
                return Err(bad_meta(format!("bad trace line `{line}`")));
            };
            let int = |s: &str| s.parse::<usize>().map_err(|_| bad_meta(format!("bad integer `{s}`")));
            let ranges = ranges
                .split(';')
                .map(|r| {
                    let (a, b) = r.split_once(':').ok_or_else(|| bad_meta(format!("bad range `{r}`")))?;
                    Ok((int(a)?, int(b)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let score = match score {
                "none" => None,
                s => Some(s.parse().map_err(|_| bad_meta(format!("bad score `{s}`")))?),
            };
            Ok(SearchStep {
                round: int(round)?,
                mode_pos: int(pos)?,
                ranges,
                score,
            })
        })
        .collect()
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    let s = Sections(decode_sections(bytes)?);
    let config = PipelineConfig::from_text(s.text("config")?)?;
    let mut meta: BTreeMap<&str, &str> = BTreeMap::new();
    let mut class_names = Vec::new();
    for line in s.text("meta")?.lines() {
        let (k, v) = line.split_once('=').ok_or_else(|| bad_meta(format!("bad line `{line}`")))?;
        if k == "class" {
            class_names.push(v.to_string());
        } else {
            meta.insert(k, v);
        }
    }
    let get = |k: &str| meta.get(k).copied().ok_or_else(|| bad_meta(format!("missing `{k}`")));
    let tensor_dims: Vec<usize> = parse_list(get("tensor_dims")?)?;
    let mode_ambient: Vec<usize> = parse_list(get("mode_ambient")?)?;
    let mode_dims: Vec<usize> = parse_list(get("mode_dims")?)?;
    let angle_counts: Vec<usize> = parse_list(get("angle_counts")?)?;
    let n_refs: usize = get("references")?.parse().map_err(|_| bad_meta("bad reference count"))?;
    let ref_labels: Vec<usize> = parse_list(get("ref_labels")?)?;
    let n = config.modes.len();
    if [mode_ambient.len(), mode_dims.len(), angle_counts.len()].iter().any(|&l| l != n) || ref_labels.len() != n_refs {
        return Err(bad_meta("per-mode lists disagree with the configured modes"));
    }

    let gds = match get("gds")? {
        "none" => None,
        spec => {
            let mut out = Vec::with_capacity(n);
            for (pos, item) in spec.split(',').enumerate() {
                let f: Vec<usize> = item
                    .split(':')
                    .map(|x| x.parse().map_err(|_| bad_meta(format!("bad GDS entry `{item}`"))))
                    .collect::<Result<_>>()?;
                let [mode, alpha, beta] = f[..] else {
                    return Err(bad_meta(format!("bad GDS entry `{item}`")));
                };
                let vecs = s.matrix(&format!("gds/{pos}/eigvecs"))?.clone();
                let vals = DVector::from_column_slice(s.matrix(&format!("gds/{pos}/eigvals"))?.as_slice());
                out.push(GdsBasis::from_eigen(mode, vecs, vals, alpha, Some(beta))?);
            }
            Some(out)
        }
    };

    let point = |prefix: &str, i: usize, label: usize| -> Result<ProductPoint> {
        let parts = (0..n)
            .map(|pos| Subspace::new(s.matrix(&format!("{prefix}/{i}/{pos}"))?.clone()))
            .collect::<Result<Vec<_>>>()?;
        ProductPoint::new(parts, Some(label))
    };
    let references = (0..n_refs).map(|i| point("ref", i, ref_labels[i])).collect::<Result<Vec<_>>>()?;
    let class_means = (0..class_names.len())
        .map(|j| point("karcher", j, j))
        .collect::<Result<Vec<_>>>()?;
    let weights = WeightVector {
        weights: s.matrix("weights")?.as_slice().to_vec(),
    };
    if weights.len() != n {
        return Err(bad_meta("weight count disagrees with the configured modes"));
    }
    Ok(TrainedModel {
        config,
        tensor_dims,
        mode_ambient,
        mode_dims,
        angle_counts,
        gds,
        weights,
        references,
        class_means,
        class_names,
        fisher_raw: parse_fisher(get("fisher_raw")?)?,
        fisher: parse_fisher(get("fisher")?)?,
        search_trace: parse_trace(s.text("trace")?)?,
        class_angles: parse_angles(get("class_angles")?, n)?,
    })
}

fn parse_angles(text: &str, modes: usize) -> Result<Option<Vec<(f64, f64)>>> {
    if text == "none" {
        return Ok(None);
    }
    let out = text
        .split(';')
        .map(|item| {
            let (b, a) = item.split_once(':').ok_or_else(|| bad_meta(format!("bad class angle `{item}`")))?;
            let num = |x: &str| x.parse::<f64>().map_err(|_| bad_meta(format!("bad class angle `{item}`")));
            Ok((num(b)?, num(a)?))
        })
        .collect::<Result<Vec<_>>>()?;
    if out.len() != modes {
        return Err(bad_meta("class angle count disagrees with the configured modes"));
    }
    Ok(Some(out))
}

pub fn write_model(path: &Path, model: &TrainedModel) -> Result<()> {
    write_atomic(path, &encode_model(model)?)
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    decode_model(&read_file(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_roundtrip_and_corruption() {
        let sections = vec![
            ("a".to_string(), Section::Text("x=1\n".into())),
            ("m".to_string(), Section::Matrix(DMatrix::from_fn(3, 2, |i, j| i as f64 - 0.1 * j as f64))),
        ];
        let bytes = encode_sections(&sections).unwrap();
        let back = decode_sections(&bytes).unwrap();
        assert_eq!(back["a"], sections[0].1);
        assert_eq!(back["m"], sections[1].1);

        assert!(matches!(decode_sections(&bytes[..bytes.len() - 7]), Err(Error::Checksum { .. })));
        let mut v = bytes.clone();
        v[4] = 9;
        assert!(matches!(decode_sections(&v), Err(Error::Version { found: 9, .. })));
        let mut v = bytes.clone();
        v[20] ^= 0x40;
        assert!(matches!(decode_sections(&v), Err(Error::Checksum { .. })));
        let mut v = bytes;
        v[0] = b'X';
        assert!(matches!(decode_sections(&v), Err(Error::Format { offset: 0, .. })));
    }
}

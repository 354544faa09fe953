//! Binary little-endian PLY in the de-facto Gaussian splat schema.
//!
//! Recognized vertex properties map onto [`GaussianSplat`] fields; anything
//! else (including `nx, ny, nz`) is preserved untouched as opaque extras so
//! that writing a loaded scene reproduces every vertex payload byte exactly.
//! ASCII and big-endian files are rejected rather than parsed.

use splatprune_core::splat::{sh_degree_from_rest_len, sh_rest_len, GaussianSplat, SplatScene};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlyError {
    #[error("required vertex property `{0}` is missing")]
    MissingProperty(&'static str),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("payload truncated: expected {expected} bytes of vertex data, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("scene contains no splats")]
    EmptyScene,
}

/// Where one property's value lives in the splat struct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    PosX,
    PosY,
    PosZ,
    ShDc(usize),
    ShRest(usize),
    Opacity,
    Scale(usize),
    Rot(usize),
    Extra(usize),
}

fn classify(names: &[String]) -> Result<(Vec<Slot>, u8), PlyError> {
    let mut slots = Vec::with_capacity(names.len());
    let mut extra_count = 0usize;
    let mut rest_indices = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(PlyError::UnsupportedFormat(format!(
                "duplicate vertex property `{name}`"
            )));
        }
        let slot = match name.as_str() {
            "x" => Slot::PosX,
            "y" => Slot::PosY,
            "z" => Slot::PosZ,
            "opacity" => Slot::Opacity,
            "f_dc_0" => Slot::ShDc(0),
            "f_dc_1" => Slot::ShDc(1),
            "f_dc_2" => Slot::ShDc(2),
            "scale_0" => Slot::Scale(0),
            "scale_1" => Slot::Scale(1),
            "scale_2" => Slot::Scale(2),
            "rot_0" => Slot::Rot(0),
            "rot_1" => Slot::Rot(1),
            "rot_2" => Slot::Rot(2),
            "rot_3" => Slot::Rot(3),
            other => {
                if let Some(idx) = other
                    .strip_prefix("f_rest_")
                    .and_then(|s| s.parse::<usize>().ok())
                {
                    rest_indices.push(idx);
                    Slot::ShRest(idx)
                } else {
                    extra_count += 1;
                    Slot::Extra(extra_count - 1)
                }
            }
        };
        slots.push(slot);
    }

    for (prop, slot) in [
        ("x", Slot::PosX),
        ("y", Slot::PosY),
        ("z", Slot::PosZ),
        ("f_dc_0", Slot::ShDc(0)),
        ("f_dc_1", Slot::ShDc(1)),
        ("f_dc_2", Slot::ShDc(2)),
        ("opacity", Slot::Opacity),
        ("scale_0", Slot::Scale(0)),
        ("scale_1", Slot::Scale(1)),
        ("scale_2", Slot::Scale(2)),
        ("rot_0", Slot::Rot(0)),
        ("rot_1", Slot::Rot(1)),
        ("rot_2", Slot::Rot(2)),
        ("rot_3", Slot::Rot(3)),
    ] {
        if !slots.contains(&slot) {
            return Err(PlyError::MissingProperty(prop));
        }
    }

    rest_indices.sort_unstable();
    let sh_degree = sh_degree_from_rest_len(rest_indices.len()).ok_or_else(|| {
        PlyError::UnsupportedFormat(format!(
            "{} f_rest properties do not correspond to an SH degree in 0..=3",
            rest_indices.len()
        ))
    })?;
    if rest_indices.iter().enumerate().any(|(i, &r)| i != r) {
        return Err(PlyError::UnsupportedFormat(
            "f_rest property indices are not contiguous from 0".into(),
        ));
    }
    Ok((slots, sh_degree))
}

/// Parse a binary little-endian splat PLY.
pub fn load_ply(bytes: &[u8]) -> Result<SplatScene, PlyError> {
    let (header_end, header) = split_header(bytes)?;
    let mut lines = header.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(PlyError::UnsupportedFormat(
            "missing `ply` magic on the first line".into(),
        ));
    }

    let mut format_seen = false;
    let mut vertex_count: Option<usize> = None;
    let mut in_vertex_element = false;
    let mut property_order: Vec<String> = Vec::new();
    for line in lines {
        if line.is_empty() || line.starts_with("comment") || line.starts_with("obj_info") {
            continue;
        }
        if line == "end_header" {
            break;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => {
                let fmt = parts.next().unwrap_or("");
                if fmt != "binary_little_endian" {
                    return Err(PlyError::UnsupportedFormat(format!(
                        "format `{fmt}` (only binary_little_endian 1.0 is supported)"
                    )));
                }
                format_seen = true;
            }
            Some("element") => {
                let name = parts.next().unwrap_or("");
                if name != "vertex" || vertex_count.is_some() {
                    return Err(PlyError::UnsupportedFormat(format!(
                        "unexpected element `{name}`; exactly one vertex element is supported"
                    )));
                }
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| PlyError::UnsupportedFormat("bad element count".into()))?;
                vertex_count = Some(count);
                in_vertex_element = true;
            }
            Some("property") => {
                if !in_vertex_element {
                    return Err(PlyError::UnsupportedFormat(
                        "property before any element".into(),
                    ));
                }
                let ty = parts.next().unwrap_or("");
                if ty != "float" {
                    return Err(PlyError::UnsupportedFormat(format!(
                        "property type `{ty}` (only 32-bit floats are supported)"
                    )));
                }
                let name = parts
                    .next()
                    .ok_or_else(|| PlyError::UnsupportedFormat("unnamed property".into()))?;
                property_order.push(name.to_string());
            }
            Some(other) => {
                return Err(PlyError::UnsupportedFormat(format!(
                    "unknown header directive `{other}`"
                )));
            }
            None => {}
        }
    }
    if !format_seen {
        return Err(PlyError::UnsupportedFormat("missing format line".into()));
    }
    let count = vertex_count
        .ok_or_else(|| PlyError::UnsupportedFormat("missing vertex element".into()))?;

    let (slots, sh_degree) = classify(&property_order)?;
    let stride = 4 * slots.len();
    let payload = &bytes[header_end..];
    if payload.len() != count * stride {
        return Err(PlyError::TruncatedPayload {
            expected: count * stride,
            found: payload.len(),
        });
    }

    let rest_len = sh_rest_len(sh_degree);
    let extra_len = slots
        .iter()
        .filter(|s| matches!(s, Slot::Extra(_)))
        .count();
    let mut splats = Vec::with_capacity(count);
    for v in 0..count {
        let base = v * stride;
        let mut splat = GaussianSplat {
            position: [0.0; 3],
            scale_log: [0.0; 3],
            rotation: [0.0; 4],
            opacity_logit: 0.0,
            sh_dc: [0.0; 3],
            sh_rest: vec![0.0; rest_len],
            extra: vec![0.0; extra_len],
        };
        for (p, slot) in slots.iter().enumerate() {
            let off = base + 4 * p;
            let value = f32::from_le_bytes(payload[off..off + 4].try_into().unwrap());
            match *slot {
                Slot::PosX => splat.position[0] = value,
                Slot::PosY => splat.position[1] = value,
                Slot::PosZ => splat.position[2] = value,
                Slot::ShDc(i) => splat.sh_dc[i] = value,
                Slot::ShRest(i) => splat.sh_rest[i] = value,
                Slot::Opacity => splat.opacity_logit = value,
                Slot::Scale(i) => splat.scale_log[i] = value,
                Slot::Rot(i) => splat.rotation[i] = value,
                Slot::Extra(i) => splat.extra[i] = value,
            }
        }
        splats.push(splat);
    }

    Ok(SplatScene {
        splats,
        sh_degree,
        property_order,
    })
}

/// Serialize a scene as binary little-endian PLY in its stored property
/// order. Vertex payload bytes reproduce the loaded input exactly.
pub fn save_ply(scene: &SplatScene) -> Result<Vec<u8>, PlyError> {
    if scene.is_empty() {
        return Err(PlyError::EmptyScene);
    }
    let (slots, _) = classify(&scene.property_order)?;

    let mut out = Vec::with_capacity(128 + scene.len() * 4 * slots.len());
    out.extend_from_slice(b"ply\n");
    out.extend_from_slice(b"format binary_little_endian 1.0\n");
    out.extend_from_slice(format!("element vertex {}\n", scene.len()).as_bytes());
    for name in &scene.property_order {
        out.extend_from_slice(format!("property float {name}\n").as_bytes());
    }
    out.extend_from_slice(b"end_header\n");

    for splat in &scene.splats {
        for slot in &slots {
            let value = match *slot {
                Slot::PosX => splat.position[0],
                Slot::PosY => splat.position[1],
                Slot::PosZ => splat.position[2],
                Slot::ShDc(i) => splat.sh_dc[i],
                Slot::ShRest(i) => splat.sh_rest[i],
                Slot::Opacity => splat.opacity_logit,
                Slot::Scale(i) => splat.scale_log[i],
                Slot::Rot(i) => splat.rotation[i],
                Slot::Extra(i) => splat.extra[i],
            };
            out.extend_from_slice(&value.to_le_bytes());
        }
    }
    Ok(out)
}

/// The reference exporter's property order: positions, zeroed normals, DC
/// and higher SH coefficients, opacity, log scales, rotation quaternion.
pub fn canonical_property_order(sh_degree: u8) -> Vec<String> {
    let mut names: Vec<String> = ["x", "y", "z", "nx", "ny", "nz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..3 {
        names.push(format!("f_dc_{i}"));
    }
    for i in 0..sh_rest_len(sh_degree) {
        names.push(format!("f_rest_{i}"));
    }
    names.push("opacity".into());
    for i in 0..3 {
        names.push(format!("scale_{i}"));
    }
    for i in 0..4 {
        names.push(format!("rot_{i}"));
    }
    names
}

/// Byte offset of the payload and the decoded header text.
fn split_header(bytes: &[u8]) -> Result<(usize, &str), PlyError> {
    const END: &[u8] = b"end_header\n";
    let pos = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| PlyError::UnsupportedFormat("missing end_header".into()))?;
    let header_end = pos + END.len();
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| PlyError::UnsupportedFormat("header is not valid UTF-8".into()))?;
    Ok((header_end, header))
}

/// The vertex payload region of a serialized PLY (for byte-exactness tests).
pub fn payload_of(bytes: &[u8]) -> Option<&[u8]> {
    const END: &[u8] = b"end_header\n";
    let pos = bytes.windows(END.len()).position(|w| w == END)?;
    Some(&bytes[pos + END.len()..])
}

//! Reference-set persistence: a little-endian binary file plus a JSON sidecar.
//!
//! Binary layout:
//!
//! ```text
//! magic "GRASPREF", version u32
//! key [u8; 32]                      hash of the inputs the reference was built from
//! object_id, oracle_version         u32 length + UTF-8
//! grid                              translation_step, rotation_step, min xyz, max xyz (8 x f64)
//! gripper                           max_opening, finger_length, finger_box, palm_box,
//!                                   closing_axis, approach_axis (14 x f64), contact_rays (2 x u32)
//! friction f64
//! counts                            enumerated, valid, success (3 x u64)
//! robustness flag u8                if 1: eps f64, omega f64, domain u8
//! n u64
//! poses                             n x (px py pz qw qx qy qz) f64
//! grid_index                        n x u64
//! label bits                        n x u8: 1 valid, 2 success, 4 contact made
//! jaw_width                         n x f32, NaN without contact
//! quality                           n x f32
//! robustness                        n x f32, only if the flag is set
//! checksum [u8; 32]                 SHA-256 of everything before it
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use grasp_core::linalg::{Quat, Vec3};
use grasp_core::oracle::{ReferenceCounts, ReferenceGrasp, RobustnessDomain, RobustnessInfo};
use grasp_core::{Aabb, GraspLabel, GridSpec, GripperSpec, Pose, ReferenceSet};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};
use crate::util::{sha256_hex, write_atomic, write_json_atomic};

pub const MAGIC: &[u8; 8] = b"GRASPREF";
pub const FORMAT_VERSION: u32 = 1;
pub const EXTENSION: &str = "grf";

const VALID: u8 = 1;
const SUCCESS: u8 = 2;
const CONTACT: u8 = 4;

pub fn binary_path(dir: &Path, object_id: &str) -> PathBuf {
    dir.join(format!("{object_id}.{EXTENSION}"))
}

pub fn sidecar_path(dir: &Path, object_id: &str) -> PathBuf {
    dir.join(format!("{object_id}.json"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshInfo {
    pub path: PathBuf,
    pub sha256: String,
    pub scale: f64,
    pub faces: usize,
    pub watertight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustSetSize {
    pub gamma: f64,
    pub size: usize,
}

/// Human-readable summary written next to each binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSidecar {
    pub object_id: String,
    pub key: String,
    pub config_hash: String,
    pub format_version: u32,
    pub oracle_version: String,
    pub file: String,
    pub file_sha256: String,
    pub mesh: MeshInfo,
    pub counts: ReferenceCounts,
    pub grid: GridSpec,
    pub grid_orientations: usize,
    pub gripper: GripperSpec,
    pub friction: f64,
    pub robustness: Option<RobustnessInfo<f64>>,
    pub robust_set_sizes: Vec<RobustSetSize>,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn vec3(&mut self, v: Vec3<f64>) {
        v.to_f64().into_iter().for_each(|x| self.f64(x));
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.at < n {
            return Err(self.error("truncated"));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
    fn error(&self, message: &str) -> PipelineError {
        PipelineError::Format { path: self.path.to_path_buf(), message: format!("{message} at byte {}", self.at) }
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
    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn vec3(&mut self) -> Result<Vec3<f64>> {
        Ok(Vec3::new(self.f64()?, self.f64()?, self.f64()?))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| self.error("invalid UTF-8"))
    }
    fn count(&mut self, per_item: usize) -> Result<usize> {
        let n = self.u64()? as usize;
        if n.checked_mul(per_item).is_none_or(|b| b > self.bytes.len() - self.at) {
            return Err(self.error("element count exceeds file size"));
        }
        Ok(n)
    }
}

fn domain_code(d: RobustnessDomain) -> u8 {
    match d {
        RobustnessDomain::ValidOnly => 0,
        RobustnessDomain::AllEnumerated => 1,
    }
}

/// Serialises `reference` with its input `key` (32 bytes).
pub fn encode(reference: &ReferenceSet, key: &[u8; 32]) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(128 + reference.grasps.len() * 85));
    w.0.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);
    w.0.extend_from_slice(key);
    w.str(&reference.object_id);
    w.str(&reference.oracle_version);
    let grid = &reference.grid;
    w.f64(grid.translation_step);
    w.f64(grid.rotation_step);
    w.vec3(grid.bounds.min);
    w.vec3(grid.bounds.max);
    let g = &reference.gripper;
    w.f64(g.max_opening);
    w.f64(g.finger_length);
    w.vec3(g.finger_box);
    w.vec3(g.palm_box);
    w.vec3(g.closing_axis);
    w.vec3(g.approach_axis);
    w.u32(g.contact_rays[0] as u32);
    w.u32(g.contact_rays[1] as u32);
    w.f64(reference.friction);
    w.u64(reference.counts.enumerated);
    w.u64(reference.counts.valid);
    w.u64(reference.counts.success);
    let robustness = reference.robustness.as_ref().zip(reference.robustness_info.as_ref());
    match robustness {
        Some((_, info)) => {
            w.u8(1);
            w.f64(info.eps);
            w.f64(info.omega);
            w.u8(domain_code(info.domain));
        }
        None => w.u8(0),
    }
    let grasps = &reference.grasps;
    w.u64(grasps.len() as u64);
    for r in grasps {
        r.pose.to_f64_array().into_iter().for_each(|x| w.f64(x));
    }
    grasps.iter().for_each(|r| w.u64(r.grid_index));
    for r in grasps {
        let l = &r.label;
        w.u8((u8::from(l.valid) * VALID) | (u8::from(l.success) * SUCCESS) | (u8::from(l.jaw_width.is_some()) * CONTACT));
    }
    grasps.iter().for_each(|r| w.f32(r.label.jaw_width.map_or(f32::NAN, |x| x as f32)));
    grasps.iter().for_each(|r| w.f32(r.label.quality as f32));
    if let Some((scores, _)) = robustness {
        scores.iter().for_each(|&s| w.f32(s as f32));
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

/// Parses a reference file, returning the set and its input key.
pub fn decode(bytes: &[u8], path: &Path) -> Result<(ReferenceSet, [u8; 32])> {
    let bad = |m: &str| PipelineError::Format { path: path.to_path_buf(), message: m.into() };
    if bytes.len() < MAGIC.len() + 4 + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad("not a reference file (bad magic)"));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != checksum {
        return Err(bad("checksum mismatch"));
    }
    let mut r = Reader { bytes: body, at: MAGIC.len(), path };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported format version {version}")));
    }
    let key: [u8; 32] = r.take(32)?.try_into().unwrap();
    let object_id = r.str()?;
    let oracle_version = r.str()?;
    let translation_step = r.f64()?;
    let rotation_step = r.f64()?;
    let bounds = Aabb::new(r.vec3()?, r.vec3()?);
    let grid = GridSpec { translation_step, rotation_step, bounds };
    let gripper = GripperSpec {
        max_opening: r.f64()?,
        finger_length: r.f64()?,
        finger_box: r.vec3()?,
        palm_box: r.vec3()?,
        closing_axis: r.vec3()?,
        approach_axis: r.vec3()?,
        contact_rays: [r.u32()? as usize, r.u32()? as usize],
    };
    let friction = r.f64()?;
    let counts = ReferenceCounts { enumerated: r.u64()?, valid: r.u64()?, success: r.u64()? };
    let robustness_info = match r.u8()? {
        0 => None,
        1 => {
            let eps = r.f64()?;
            let omega = r.f64()?;
            let domain = match r.u8()? {
                0 => RobustnessDomain::ValidOnly,
                1 => RobustnessDomain::AllEnumerated,
                _ => return Err(r.error("unknown robustness domain")),
            };
            Some(RobustnessInfo { eps, omega, domain })
        }
        _ => return Err(r.error("bad robustness flag")),
    };
    let n = r.count(7 * 8 + 8 + 1 + 4 + 4)?;
    let mut poses = Vec::with_capacity(n);
    for _ in 0..n {
        let p = r.vec3()?;
        let q = Quat::new(r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        poses.push(Pose { p, q });
    }
    let grid_index = (0..n).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let bits = (0..n).map(|_| r.u8()).collect::<Result<Vec<_>>>()?;
    let jaw = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    let quality = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
    let robustness = match robustness_info {
        Some(_) => Some((0..n).map(|_| r.f32().map(f64::from)).collect::<Result<Vec<_>>>()?),
        None => None,
    };
    if r.at != body.len() {
        return Err(r.error("trailing bytes"));
    }
    let grasps = (0..n)
        .map(|i| ReferenceGrasp {
            pose: poses[i],
            label: GraspLabel {
                valid: bits[i] & VALID != 0,
                success: bits[i] & SUCCESS != 0,
                jaw_width: (bits[i] & CONTACT != 0).then_some(f64::from(jaw[i])),
                quality: f64::from(quality[i]),
            },
            grid_index: grid_index[i],
        })
        .collect();
    let reference = ReferenceSet {
        object_id,
        grid,
        gripper,
        friction,
        oracle_version,
        counts,
        grasps,
        robustness,
        robustness_info,
    };
    Ok((reference, key))
}

pub fn write(dir: &Path, reference: &ReferenceSet, key: &[u8; 32], sidecar: &ReferenceSidecar) -> Result<()> {
    let bytes = encode(reference, key);
    let mut sidecar = sidecar.clone();
    sidecar.file_sha256 = sha256_hex(&bytes);
    write_atomic(&binary_path(dir, &reference.object_id), &bytes)?;
    write_json_atomic(&sidecar_path(dir, &reference.object_id), &sidecar)
}

pub fn read(path: &Path) -> Result<(ReferenceSet, [u8; 32])> {
    let bytes = fs::read(path).map_err(PipelineError::io(path))?;
    decode(&bytes, path)
}

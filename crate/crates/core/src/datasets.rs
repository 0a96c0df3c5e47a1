//! Synthetic instance families and the JSON instance format.
//!
//! Masses are drawn from the family distribution and then mapped affinely to
//! a sample mean of 10⁴ and a sample standard deviation of 100, so only the
//! shape of the distribution distinguishes the families.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{BladeSet, DiskImbalance, ModelError};
use crate::seeds;

pub const TARGET_MEAN: f64 = 1e4;
pub const TARGET_STD: f64 = 100.0;
/// Relative tolerance of the mean/std check on load.
pub const SCALING_TOLERANCE: f64 = 1e-6;
/// Bare imbalance magnitude used for the "with imbalance" corpus (5% of the mean mass).
pub const DEFAULT_BARE_IMBALANCE: f64 = 500.0;

const BETA_ALPHA: f64 = 2.0;
const BETA_BETA: f64 = 5.0;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{family} instances need at least 2 blades, got {n}")]
    TooFewBlades { family: Family, n: usize },
    #[error("scaled mass {value} of blade {index} is not positive")]
    NonPositiveMass { index: usize, value: f64 },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("unknown instance family `{0}`")]
    UnknownFamily(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl DatasetError {
    fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Field { field: field.into(), message: message.into() }
    }
}

/// Instance families. The three `*Syn` families are normally distributed
/// stand-ins at the sizes of the industrial instances (22, 84 and 86 blades).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "BETA")]
    Beta,
    #[serde(rename = "NORM")]
    Norm,
    #[serde(rename = "F22SYN")]
    F22Syn,
    #[serde(rename = "STG1SYN")]
    Stg1Syn,
    #[serde(rename = "STG2SYN")]
    Stg2Syn,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::Beta, Family::Norm, Family::F22Syn, Family::Stg1Syn, Family::Stg2Syn];

    pub fn label(self) -> &'static str {
        match self {
            Family::Beta => "BETA",
            Family::Norm => "NORM",
            Family::F22Syn => "F22SYN",
            Family::Stg1Syn => "STG1SYN",
            Family::Stg2Syn => "STG2SYN",
        }
    }

    /// Blade count of the real instance a stand-in family imitates.
    pub fn nominal_size(self) -> Option<usize> {
        match self {
            Family::F22Syn => Some(22),
            Family::Stg1Syn => Some(84),
            Family::Stg2Syn => Some(86),
            Family::Beta | Family::Norm => None,
        }
    }

    fn distribution(self) -> &'static str {
        match self {
            Family::Beta => "beta(2,5)",
            _ => "normal(0,1)",
        }
    }

    pub fn instance_name(self, n: usize, serial: u64) -> String {
        match self {
            Family::Beta | Family::Norm => format!("{}{}_{:04}", self.label(), n, serial),
            _ => format!("{}_{:04}", self.label(), serial),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Family {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| DatasetError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BareImbalance {
    pub m0: f64,
    pub phi0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub family: Family,
    pub distribution: String,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

/// On-disk instance document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub name: String,
    pub masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bare_imbalance: Option<BareImbalance>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

/// Sample mean and sample (n − 1) standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn rng_for(family: Family, n: usize, seed: u64, stream: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seeds::mix(&[seeds::hash_str(family.label()), n as u64, seed, seeds::hash_str(stream)]))
}

/// Bare imbalance for the "with imbalance" experiments: fixed magnitude, angle uniform per seed.
pub fn default_bare_imbalance(family: Family, n: usize, seed: u64) -> BareImbalance {
    let phi0 = rng_for(family, n, seed, "phi0").random_range(0.0..std::f64::consts::TAU);
    BareImbalance { m0: DEFAULT_BARE_IMBALANCE, phi0 }
}

/// Draws `n` masses from the family distribution, standardizes them to mean
/// 10⁴ / std 100 and wraps them as an instance named `FAMILY{n}_{seed mod 10⁴}`.
pub fn generate(family: Family, n: usize, seed: u64, m0: f64, phi0: f64) -> Result<InstanceFile, DatasetError> {
    if n < 2 {
        return Err(DatasetError::TooFewBlades { family, n });
    }
    let disk = DiskImbalance::from_polar(m0, phi0)?;
    let mut rng = rng_for(family, n, seed, "masses");
    let raw: Vec<f64> = match family {
        Family::Beta => {
            let beta = Beta::new(BETA_ALPHA, BETA_BETA).expect("valid beta parameters");
            (0..n).map(|_| beta.sample(&mut rng)).collect()
        }
        _ => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
    };
    let (mean, std) = mean_std(&raw);
    if !(std > 0.0) {
        return Err(DatasetError::field("masses", "degenerate sample with zero spread"));
    }
    let masses: Vec<f64> = raw.iter().map(|x| TARGET_MEAN + TARGET_STD * (x - mean) / std).collect();
    if let Some((index, &value)) = masses.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
        return Err(DatasetError::NonPositiveMass { index, value });
    }
    let mut notes = BTreeMap::new();
    if family.nominal_size().is_some() {
        notes.insert("stand_in".into(), "synthetic substitute for a proprietary instance".into());
    }
    notes.insert("parameters".into(), "distribution parameters are stand-in choices".into());
    Ok(InstanceFile {
        name: family.instance_name(n, seed % 10_000),
        masses,
        bare_imbalance: Some(BareImbalance { m0: disk.m0(), phi0: disk.phi0() }),
        provenance: Some(Provenance {
            family,
            distribution: family.distribution().into(),
            seed,
            mean: TARGET_MEAN,
            std: TARGET_STD,
            notes,
        }),
    })
}

impl InstanceFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &Path) -> Result<Self, DatasetError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|source| DatasetError::Json { path: origin.into(), source })?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.masses.is_empty() {
            return Err(DatasetError::field("masses", "no blades"));
        }
        for (i, &m) in self.masses.iter().enumerate() {
            if !(m.is_finite() && m > 0.0) {
                return Err(DatasetError::field(format!("masses[{i}]"), format!("mass {m} is not positive")));
            }
        }
        if let Some(b) = &self.bare_imbalance {
            if !(b.m0.is_finite() && b.m0 >= 0.0) {
                return Err(DatasetError::field("bare_imbalance.m0", format!("{} is not a non-negative number", b.m0)));
            }
            if !b.phi0.is_finite() {
                return Err(DatasetError::field("bare_imbalance.phi0", format!("{} is not finite", b.phi0)));
            }
        }
        if let Some(p) = &self.provenance {
            if self.masses.len() < 2 {
                return Err(DatasetError::field("masses", "generated instances have at least 2 blades"));
            }
            let (mean, std) = mean_std(&self.masses);
            if (mean - p.mean).abs() > SCALING_TOLERANCE * p.mean.abs() {
                return Err(DatasetError::field("provenance.mean", format!("sample mean {mean} differs from {}", p.mean)));
            }
            if (std - p.std).abs() > SCALING_TOLERANCE * p.std.abs() {
                return Err(DatasetError::field("provenance.std", format!("sample std {std} differs from {}", p.std)));
            }
        }
        Ok(())
    }

    /// Model view. A missing bare imbalance means a balanced disk.
    pub fn to_model(&self) -> Result<(BladeSet<f64>, DiskImbalance<f64>), DatasetError> {
        let blades = BladeSet::new(self.name.clone(), self.masses.clone())?;
        let disk = match &self.bare_imbalance {
            Some(b) => DiskImbalance::from_polar(b.m0, b.phi0)?,
            None => {
                log::warn!("instance {}: no bare_imbalance given, assuming m0 = 0", self.name);
                DiskImbalance::none()
            }
        };
        Ok((blades, disk))
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        fs::write(path, self.to_json()).map_err(|source| DatasetError::Io { path: path.into(), source })
    }
}

pub fn read_instance(path: &Path) -> Result<InstanceFile, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
    InstanceFile::from_json(&text, path)
}

/// Loads an instance file straight into model types.
pub fn load(path: &Path) -> Result<(BladeSet<f64>, DiskImbalance<f64>), DatasetError> {
    read_instance(path)?.to_model()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
}

/// List of instance files making up a benchmark corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub instances: Vec<ManifestEntry>,
    #[serde(skip)]
    base: PathBuf,
}

impl Manifest {
    pub fn new(instances: Vec<ManifestEntry>, base: impl Into<PathBuf>) -> Self {
        Self { instances, base: base.into() }
    }

    pub fn read(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.into(), source })?;
        let mut m: Manifest =
            serde_json::from_str(&text).map_err(|source| DatasetError::Json { path: path.into(), source })?;
        m.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(m)
    }

    pub fn write(&self, path: &Path) -> Result<(), DatasetError> {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        fs::write(path, s).map_err(|source| DatasetError::Io { path: path.into(), source })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base.join(&entry.path)
        }
    }
}

/// The nine benchmark instances: BETA and NORM at 20, 39 and 40 blades plus
/// the three industrial-size stand-ins.
pub fn corpus_layout() -> Vec<(Family, usize)> {
    let mut v = Vec::new();
    for family in [Family::Beta, Family::Norm] {
        for n in [20, 39, 40] {
            v.push((family, n));
        }
    }
    for family in [Family::F22Syn, Family::Stg1Syn, Family::Stg2Syn] {
        v.push((family, family.nominal_size().expect("stand-in family")));
    }
    v
}

/// Generates the corpus layout and returns the instances in layout order.
pub fn generate_corpus(seed: u64, with_imbalance: bool) -> Result<Vec<InstanceFile>, DatasetError> {
    corpus_layout()
        .into_iter()
        .map(|(family, n)| {
            let b = if with_imbalance {
                default_bare_imbalance(family, n, seed)
            } else {
                BareImbalance { m0: 0.0, phi0: 0.0 }
            };
            generate(family, n, seed, b.m0, b.phi0)
        })
        .collect()
}

/// Writes the corpus files plus `manifest.json` into `dir`.
pub fn write_corpus(dir: &Path, seed: u64, with_imbalance: bool) -> Result<Manifest, DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io { path: dir.into(), source })?;
    let mut entries = Vec::new();
    for inst in generate_corpus(seed, with_imbalance)? {
        let file = PathBuf::from(format!("{}.json", inst.name));
        inst.write(&dir.join(&file))?;
        entries.push(ManifestEntry { name: inst.name.clone(), path: file });
    }
    let manifest = Manifest::new(entries, dir);
    manifest.write(&dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn skewness(v: &[f64]) -> f64 {
        let (mean, std) = mean_std(v);
        let n = v.len() as f64;
        v.iter().map(|x| ((x - mean) / std).powi(3)).sum::<f64>() / n
    }

    #[test]
    fn generation_is_deterministic_and_scaled() {
        for family in Family::ALL {
            let a = generate(family, 20, 7, 0.0, 0.0).unwrap();
            let b = generate(family, 20, 7, 0.0, 0.0).unwrap();
            assert_eq!(a.to_json(), b.to_json());
            let (mean, std) = mean_std(&a.masses);
            assert!((mean - TARGET_MEAN).abs() <= 1e-6 * TARGET_MEAN);
            assert!((std - TARGET_STD).abs() <= 1e-6 * TARGET_STD);
            a.validate().unwrap();
        }
        let c = generate(Family::Norm, 20, 8, 0.0, 0.0).unwrap();
        assert_ne!(c.masses, generate(Family::Norm, 20, 7, 0.0, 0.0).unwrap().masses);
    }

    #[test]
    fn naming_follows_family_size_serial() {
        assert_eq!(generate(Family::Beta, 20, 0, 0.0, 0.0).unwrap().name, "BETA20_0000");
        assert_eq!(generate(Family::Norm, 39, 12, 0.0, 0.0).unwrap().name, "NORM39_0012");
        assert_eq!(generate(Family::Stg2Syn, 86, 0, 0.0, 0.0).unwrap().name, "STG2SYN_0000");
        assert_eq!("stg1syn".parse::<Family>().unwrap(), Family::Stg1Syn);
        assert!("GAMMA".parse::<Family>().is_err());
    }

    #[test]
    fn rejects_single_blade() {
        assert!(matches!(generate(Family::Norm, 1, 0, 0.0, 0.0), Err(DatasetError::TooFewBlades { n: 1, .. })));
    }

    #[test]
    fn beta_family_is_right_skewed_unlike_norm() {
        // Beta(2,5) has skewness ≈ 0.60; the normal family is symmetric.
        let mut beta_pos = 0;
        let mut norm_pos = 0;
        let (mut beta_sum, mut norm_sum) = (0.0, 0.0);
        for seed in 0..100 {
            let sb = skewness(&generate(Family::Beta, 40, seed, 0.0, 0.0).unwrap().masses);
            let sn = skewness(&generate(Family::Norm, 40, seed, 0.0, 0.0).unwrap().masses);
            beta_pos += usize::from(sb > 0.0);
            norm_pos += usize::from(sn > 0.0);
            beta_sum += sb;
            norm_sum += sn;
        }
        assert!(beta_pos >= 85, "beta positive skew in {beta_pos}/100");
        assert!((35..=65).contains(&norm_pos), "norm positive skew in {norm_pos}/100");
        assert!(beta_sum / 100.0 > 0.3 && (norm_sum / 100.0).abs() < 0.15);
    }

    #[test]
    fn load_round_trips_generated_instance() {
        let dir = tempfile::tempdir().unwrap();
        let inst = generate(Family::Beta, 39, 3, 500.0, 1.25).unwrap();
        let path = dir.path().join("i.json");
        inst.write(&path).unwrap();
        assert_eq!(read_instance(&path).unwrap(), inst);
        let (blades, disk) = load(&path).unwrap();
        assert_eq!(blades.masses(), &inst.masses[..]);
        assert_eq!(blades.name(), "BETA39_0003");
        assert_eq!((disk.m0(), disk.phi0()), (500.0, 1.25));
    }

    #[test]
    fn loader_rejects_bad_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        fs::write(&path, r#"{"name":"x","masses":[1.0,-1.0]}"#).unwrap();
        let err = load(&path).unwrap_err().to_string();
        assert!(err.contains("masses[1]"), "{err}");

        fs::write(&path, r#"{"name":"x","masses":[1.0,2.0],"bare_imbalance":{"m0":-3,"phi0":0}}"#).unwrap();
        assert!(load(&path).unwrap_err().to_string().contains("bare_imbalance.m0"));

        let mut inst = generate(Family::Norm, 20, 1, 0.0, 0.0).unwrap();
        inst.masses[0] += 50.0;
        fs::write(&path, inst.to_json()).unwrap();
        assert!(load(&path).unwrap_err().to_string().contains("provenance.mean"));

        fs::write(&path, r#"{"name":"x","masses":"heavy"}"#).unwrap();
        assert!(matches!(load(&path), Err(DatasetError::Json { .. })));
    }

    #[test]
    fn missing_bare_imbalance_defaults_to_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.json");
        fs::write(&path, r#"{"name":"plain","masses":[3.0,4.0,5.0]}"#).unwrap();
        let (blades, disk) = load(&path).unwrap();
        assert_eq!(blades.len(), 3);
        assert_eq!((disk.m0(), disk.phi0()), (0.0, 0.0));
    }

    #[test]
    fn corpus_has_nine_instances_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_corpus(dir.path(), 0, true).unwrap();
        assert_eq!(manifest.instances.len(), 9);
        let names: Vec<&str> = manifest.instances.iter().map(|e| e.name.as_str()).collect();
        assert_eq!(names[0], "BETA20_0000");
        assert_eq!(names[8], "STG2SYN_0000");
        let reread = Manifest::read(&dir.path().join("manifest.json")).unwrap();
        for e in &reread.instances {
            let (b, disk) = load(&reread.resolve(e)).unwrap();
            assert_eq!(disk.m0(), DEFAULT_BARE_IMBALANCE);
            assert!(b.len() >= 20);
        }
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::HarnessError;
use crate::formula::{canonical_digest, parse_qdimacs_with, ParseOptions};
use crate::solver::Status;

/// Family of files placed directly in the benchmark root.
pub const ROOT_FAMILY: &str = "root";
pub const MANIFEST: &str = "manifest.toml";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkInstance {
    /// Path relative to the registry root, `/`-separated.
    pub id: String,
    pub path: PathBuf,
    pub family: String,
    pub digest: String,
    pub expected: Option<Status>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub instances: Vec<BenchmarkInstance>,
    pub rejected: Vec<Rejected>,
    /// Groups of instance ids sharing a digest.
    pub duplicates: Vec<Vec<String>>,
}

impl Registry {
    pub fn families(&self) -> BTreeMap<&str, Vec<&BenchmarkInstance>> {
        let mut out: BTreeMap<&str, Vec<&BenchmarkInstance>> = BTreeMap::new();
        for i in &self.instances {
            out.entry(i.family.as_str()).or_default().push(i);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkSet {
    pub seed: u64,
    pub k: usize,
    pub instances: Vec<BenchmarkInstance>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    instances: BTreeMap<String, ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    family: Option<String>,
    expected: Option<Status>,
}

/// Registers every file under `root` except hidden files and the optional
/// `manifest.toml`, which may override families and give expected results:
///
/// ```toml
/// [instances."fam1/a.qdimacs"]
/// family = "other"
/// expected = "SAT"
/// ```
pub fn register_benchmarks(root: &Path) -> Result<Registry, HarnessError> {
    let manifest_path = root.join(MANIFEST);
    let manifest: Manifest = match std::fs::read_to_string(&manifest_path) {
        Ok(text) => toml::from_str(&text).map_err(|e| HarnessError::Manifest(e.to_string()))?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Manifest::default(),
        Err(e) => return Err(HarnessError::io(&manifest_path, e)),
    };
    let mut reg = Registry::default();
    let walk = WalkDir::new(root).sort_by_file_name().into_iter().filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
    for entry in walk {
        let entry = entry.map_err(|e| HarnessError::Manifest(e.to_string()))?;
        if !entry.file_type().is_file() || entry.path() == manifest_path {
            continue;
        }
        let rel = entry.path().strip_prefix(root).expect("walk stays under root");
        let id = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        let bytes = match std::fs::read(entry.path()) {
            Ok(b) => b,
            Err(e) => {
                reg.rejected.push(Rejected { path: entry.path().to_path_buf(), reason: e.to_string() });
                continue;
            }
        };
        let f = match parse_qdimacs_with(&bytes, ParseOptions { lenient: true }) {
            Ok(f) => f,
            Err(e) => {
                reg.rejected.push(Rejected { path: entry.path().to_path_buf(), reason: e.to_string() });
                continue;
            }
        };
        let over = manifest.instances.get(&id);
        let family = over.and_then(|m| m.family.clone()).unwrap_or_else(|| {
            let parts: Vec<&str> = id.split('/').collect();
            if parts.len() > 1 { parts[0].to_string() } else { ROOT_FAMILY.to_string() }
        });
        reg.instances.push(BenchmarkInstance {
            id,
            path: entry.path().to_path_buf(),
            family,
            digest: canonical_digest(&f).to_string(),
            expected: over.and_then(|m| m.expected),
        });
    }
    if reg.instances.is_empty() {
        log::warn!("no benchmark instances under {}", root.display());
    }
    let mut by_digest: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for i in &reg.instances {
        by_digest.entry(&i.digest).or_default().push(i.id.clone());
    }
    reg.duplicates = by_digest.into_values().filter(|ids| ids.len() > 1).collect();
    for d in &reg.duplicates {
        log::warn!("identical formulas: {}", d.join(", "));
    }
    Ok(reg)
}

/// Draws min(k, family size) instances per family without replacement.
/// Families are visited in name order from one seeded stream.
pub fn stratified_sample(reg: &Registry, k: usize, seed: u64) -> BenchmarkSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instances = Vec::new();
    for members in reg.families().into_values() {
        let mut members = members;
        members.sort_by(|a, b| a.id.cmp(&b.id));
        let mut picked = index::sample(&mut rng, members.len(), k.min(members.len())).into_vec();
        picked.sort_unstable();
        instances.extend(picked.into_iter().map(|i| members[i].clone()));
    }
    BenchmarkSet { seed, k, instances }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAT: &str = "p cnf 1 1\ne 1 0\n1 0\n";

    fn write(root: &Path, rel: &str, text: &str) {
        let p = root.join(rel);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, text).unwrap();
    }

    #[test]
    fn families_from_directories() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "fam1/a.qdimacs", SAT);
        write(dir.path(), "fam1/b.qdimacs", "p cnf 2 1\ne 1 2 0\n1 2 0\n");
        write(dir.path(), "fam2/c.qdimacs", "p cnf 1 1\na 1 0\n1 0\n");
        let reg = register_benchmarks(dir.path()).unwrap();
        assert_eq!(reg.instances.len(), 3);
        assert_eq!(reg.families().len(), 2);
        assert!(reg.duplicates.is_empty() && reg.rejected.is_empty());
    }

    #[test]
    fn duplicates_rejects_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "x/a.qdimacs", SAT);
        write(dir.path(), "y/b.qdimacs", SAT);
        write(dir.path(), "y/junk.qdimacs", "hello\n");
        write(dir.path(), "top.qdimacs", SAT);
        write(dir.path(), MANIFEST, "[instances.\"x/a.qdimacs\"]\nfamily = \"z\"\nexpected = \"SAT\"\n");
        let reg = register_benchmarks(dir.path()).unwrap();
        assert_eq!(reg.instances.len(), 3);
        assert_eq!(reg.rejected.len(), 1);
        assert_eq!(reg.duplicates, vec![vec!["top.qdimacs".to_string(), "x/a.qdimacs".into(), "y/b.qdimacs".into()]]);
        let a = reg.instances.iter().find(|i| i.id == "x/a.qdimacs").unwrap();
        assert_eq!((a.family.as_str(), a.expected), ("z", Some(Status::Sat)));
        assert_eq!(reg.instances.iter().find(|i| i.id == "top.qdimacs").unwrap().family, ROOT_FAMILY);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(register_benchmarks(dir.path()).unwrap(), Registry::default());
    }

    fn synthetic(sizes: &[usize]) -> Registry {
        let mut reg = Registry::default();
        for (f, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                reg.instances.push(BenchmarkInstance {
                    id: format!("f{f}/{i}"),
                    path: PathBuf::new(),
                    family: format!("f{f}"),
                    digest: String::new(),
                    expected: None,
                });
            }
        }
        reg
    }

    #[test]
    fn sampling_counts_and_determinism() {
        let reg = synthetic(&[10, 8, 6, 4]);
        let s = stratified_sample(&reg, 6, 5);
        let counts: Vec<usize> = ["f0", "f1", "f2", "f3"].iter().map(|f| s.instances.iter().filter(|i| i.family == *f).count()).collect();
        assert_eq!(counts, vec![6, 6, 6, 4]);
        assert_eq!(stratified_sample(&reg, 6, 5), s);
        assert_ne!(stratified_sample(&reg, 6, 6).instances, s.instances);
        let mut ids: Vec<&str> = s.instances.iter().map(|i| i.id.as_str()).collect();
        ids.dedup();
        assert_eq!(ids.len(), 22);
    }
}

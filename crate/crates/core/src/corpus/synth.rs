use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_manifest, CorpusError, PairRecord};
use crate::cifparse::write_p1;
use crate::crystal::{CrystalStructure, Lattice};
use crate::elements;
use crate::numcore::rng::{derive_seed, SplitMix64};

/// One synthetic class: a label, the keyword its texts use, and its element pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthClass {
    pub name: String,
    pub keyword: String,
    /// Element symbols.
    pub elements: Vec<String>,
}

/// Generator settings. Templates use `{elements}` and `{keyword}` placeholders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    pub n_per_class: usize,
    pub seed: u64,
    pub classes: Vec<SynthClass>,
    pub templates: Vec<String>,
}

const DEFAULT_CLASSES: [(&str, &str, [&str; 8]); 8] = [
    ("photocatalyst", "photocatalyst", ["O", "Ti", "Zn", "W", "Bi", "V", "Nb", "Ta"]),
    ("superconductor", "superconducting", ["Cu", "Ba", "Y", "La", "Sr", "Hg", "Tl", "Ca"]),
    ("thermoelectric", "thermoelectric", ["Te", "Sb", "Pb", "Se", "Sn", "Ge", "Ag", "In"]),
    ("ferroelectric", "ferroelectric", ["K", "Na", "Li", "Zr", "Hf", "Sc", "Mg", "Al"]),
    ("magnet", "magnetic", ["Fe", "Co", "Ni", "Mn", "Cr", "Gd", "Nd", "Sm"]),
    ("cathode", "cathode", ["P", "F", "Cl", "S", "Mo", "Ru", "Rh", "Pd"]),
    ("framework", "porous", ["Si", "B", "C", "N", "H", "Be", "Ga", "As"]),
    ("semiconductor", "semiconducting", ["Cd", "Au", "Pt", "Ir", "Os", "Re", "Pr", "Ce"]),
];

const DEFAULT_TEMPLATES: [&str; 4] = [
    "contains {elements}; a {keyword} candidate",
    "a {keyword} compound of {elements}",
    "{elements} crystal studied as a {keyword} material",
    "synthetic {keyword} phase built from {elements}",
];

/// Fractional base positions; sites are jittered by up to ±0.05 per axis.
const BASE_POSITIONS: [[f64; 3]; 4] = [[0.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.5, 0.0, 0.5], [0.0, 0.5, 0.5]];

impl SyntheticSpec {
    /// Eight built-in classes with disjoint eight-element pools.
    pub fn standard(n_classes: usize, n_per_class: usize, seed: u64) -> Self {
        SyntheticSpec {
            n_classes,
            n_per_class,
            seed,
            classes: DEFAULT_CLASSES
                .iter()
                .map(|(n, k, e)| SynthClass {
                    name: n.to_string(),
                    keyword: k.to_string(),
                    elements: e.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
            templates: DEFAULT_TEMPLATES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::Invalid(m));
        if self.n_classes == 0 || self.n_classes > self.classes.len() {
            return bad(format!("n_classes must be in 1..={}, got {}", self.classes.len(), self.n_classes));
        }
        if self.n_per_class == 0 {
            return bad("n_per_class must be >= 1".into());
        }
        if self.templates.is_empty() {
            return bad("at least one text template is required".into());
        }
        let mut used = HashSet::new();
        for c in self.active_classes() {
            if c.elements.len() < 2 {
                return bad(format!("class {} needs at least 2 elements", c.name));
            }
            for e in &c.elements {
                if elements::atomic_number(e).is_none() {
                    return bad(format!("class {}: unknown element {e:?}", c.name));
                }
                if !used.insert(e.as_str()) {
                    return bad(format!("element {e} appears in more than one class"));
                }
            }
        }
        Ok(())
    }

    pub fn active_classes(&self) -> &[SynthClass] {
        &self.classes[..self.n_classes.min(self.classes.len())]
    }

    /// The zero-shot prompt for a class: template 1 naming the whole element pool.
    pub fn class_prompt(&self, class: &SynthClass) -> String {
        let template = &self.templates[1.min(self.templates.len() - 1)];
        fill(template, &element_phrase(&class.elements), &class.keyword)
    }
}

/// Sorted English element names joined as "a, b and c".
pub fn element_phrase<S: AsRef<str>>(symbols: &[S]) -> String {
    let mut names: Vec<&str> = symbols
        .iter()
        .map(|s| elements::atomic_number(s.as_ref()).and_then(elements::name).unwrap_or(s.as_ref()))
        .collect();
    names.sort_unstable();
    match names.len() {
        0 => String::new(),
        1 => names[0].to_string(),
        n => format!("{} and {}", names[..n - 1].join(", "), names[n - 1]),
    }
}

fn fill(template: &str, elements: &str, keyword: &str) -> String {
    template.replace("{elements}", elements).replace("{keyword}", keyword)
}

/// A generated record and its structure, before anything touches disk.
#[derive(Debug, Clone)]
pub struct SynthRecord {
    pub record: PairRecord,
    pub structure: CrystalStructure,
    pub cif_text: String,
}

/// Generate every record in memory. Record `i` of class `c` draws from its own
/// stream, so adding classes or records never changes existing ones.
pub fn synth_records(spec: &SyntheticSpec) -> Result<Vec<SynthRecord>, CorpusError> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.n_classes * spec.n_per_class);
    for (ci, class) in spec.active_classes().iter().enumerate() {
        for i in 0..spec.n_per_class {
            let mut rng = SplitMix64::new(derive_seed(derive_seed(spec.seed, ci as u64), i as u64));
            let lattice = Lattice::new(rng.uniform(3.0, 8.0), rng.uniform(3.0, 8.0), rng.uniform(3.0, 8.0), 90.0, 90.0, 90.0)
                .map_err(|e| CorpusError::Invalid(e.to_string()))?;
            let n_sites = 2 + rng.below(3) as usize;
            let mut pool: Vec<&String> = class.elements.iter().collect();
            rng.shuffle(&mut pool);
            let chosen = &pool[..n_sites.min(pool.len())];
            let sites = chosen.iter().enumerate().map(|(k, sym)| {
                let z = elements::atomic_number(sym).expect("validated");
                let frac: [f64; 3] = std::array::from_fn(|a| BASE_POSITIONS[k][a] + rng.uniform(-0.05, 0.05));
                (z, frac)
            });
            let structure = CrystalStructure::from_wrapped(lattice, sites).map_err(|e| CorpusError::Invalid(e.to_string()))?;
            let template = &spec.templates[rng.below(spec.templates.len() as u64) as usize];
            let text = fill(template, &element_phrase(chosen), &class.keyword);
            let id = format!("{}-{i:04}", class.name);
            let cif_text = write_p1(&id, &structure);
            out.push(SynthRecord {
                record: PairRecord { cif: format!("cifs/{id}.cif"), id, text, labels: Some(vec![class.name.clone()]) },
                structure,
                cif_text,
            });
        }
    }
    Ok(out)
}

/// Write `manifest.jsonl`, `cifs/*.cif` and `prompts.txt` (one class prompt per
/// line, in class order) under `dir`. Returns the records.
pub fn synth_corpus(spec: &SyntheticSpec, dir: &Path) -> Result<Vec<PairRecord>, CorpusError> {
    let recs = synth_records(spec)?;
    let cif_dir = dir.join("cifs");
    std::fs::create_dir_all(&cif_dir).map_err(|e| CorpusError::io(&cif_dir, e))?;
    for r in &recs {
        let path = dir.join(&r.record.cif);
        std::fs::write(&path, &r.cif_text).map_err(|e| CorpusError::io(&path, e))?;
    }
    let records: Vec<PairRecord> = recs.into_iter().map(|r| r.record).collect();
    let manifest = dir.join("manifest.jsonl");
    std::fs::write(&manifest, write_manifest(&records)).map_err(|e| CorpusError::io(&manifest, e))?;
    let prompts: String = spec.active_classes().iter().map(|c| spec.class_prompt(c) + "\n").collect();
    let prompts_path = dir.join("prompts.txt");
    std::fs::write(&prompts_path, prompts).map_err(|e| CorpusError::io(&prompts_path, e))?;
    Ok(records)
}

//! Seeded corpora of random instances.

use std::fs;
use std::ops::RangeInclusive;
use std::path::Path;

use rand::Rng;
use serde::Serialize;
use starhub_core::instance::{generate_random, generate_ring, GeneratorConfig, RingConfig};
use starhub_core::rng::{derive_seed, stream};
use starhub_core::Instance;

use crate::io::{read_instance_file, write_instance_file, IoError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusConfig {
    pub count: usize,
    pub seed: u64,
    pub nonhubs: RangeInclusive<usize>,
    pub hubs: RangeInclusive<usize>,
    pub ell_max: u64,
    pub c_max: f64,
    pub w_max: f64,
    pub density: f64,
    /// Odd ids come from the ring family, whose relaxations are often
    /// fractional; uniform instances almost never are.
    pub rings: bool,
}

impl Default for CorpusConfig {
    /// 50 instances with 3 to 6 non-hubs and 3 to 5 hubs, half of them rings.
    fn default() -> Self {
        let g = GeneratorConfig::default();
        Self {
            count: 50,
            seed: 2024,
            nonhubs: 3..=6,
            hubs: 3..=5,
            ell_max: g.ell_max,
            c_max: g.c_max,
            w_max: g.w_max,
            density: g.density,
            rings: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub id: usize,
    pub instance: Instance,
}

/// Instance `id` depends only on `(cfg, id)`, never on `count`.
pub fn generate_corpus(cfg: &CorpusConfig) -> Vec<CorpusEntry> {
    (0..cfg.count)
        .map(|id| {
            let seed = derive_seed(cfg.seed, id as u64);
            let mut rng = stream(seed);
            let (seed, nonhubs, hubs) = (
                rng.random(),
                rng.random_range(cfg.nonhubs.clone()),
                rng.random_range(cfg.hubs.clone()),
            );
            let instance = if cfg.rings && id % 2 == 1 {
                generate_ring(&RingConfig {
                    seed,
                    nonhubs,
                    hubs,
                    ..Default::default()
                })
            } else {
                generate_random(&GeneratorConfig {
                    seed,
                    nonhubs,
                    hubs,
                    ell_max: cfg.ell_max,
                    c_max: cfg.c_max,
                    w_max: cfg.w_max,
                    density: cfg.density,
                })
            };
            CorpusEntry { id, instance }
        })
        .collect()
}

pub fn entry_file_name(id: usize) -> String {
    format!("instance_{id:04}.json")
}

pub fn write_corpus(dir: &Path, entries: &[CorpusEntry]) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|source| IoError::File {
        path: dir.display().to_string(),
        source,
    })?;
    for e in entries {
        write_instance_file(&dir.join(entry_file_name(e.id)), &e.instance)?;
    }
    Ok(())
}

/// Every `*.json` file of `dir` in file-name order; ids are positions.
pub fn read_corpus(dir: &Path) -> Result<Vec<CorpusEntry>, IoError> {
    let listing = fs::read_dir(dir).map_err(|source| IoError::File {
        path: dir.display().to_string(),
        source,
    })?;
    let mut paths: Vec<_> = listing
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .enumerate()
        .map(|(id, p)| {
            Ok(CorpusEntry {
                id,
                instance: read_instance_file(p)?,
            })
        })
        .collect()
}

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pground::config::{load_config, CampaignConfig};
use pground::runner::Executor;
use pground_core::scenario::{TimeOfDay, Weather};

pub fn shipped_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/aeb_campaign.toml")
}

pub fn shipped() -> CampaignConfig {
    load_config(&shipped_path()).expect("shipped config loads")
}

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_pground"))
}

pub fn process() -> Executor {
    Executor::Process { program: bin() }
}

/// Two profiles, two times, two weathers: 8 cases in batches of 4.
pub fn small(out: &Path) -> CampaignConfig {
    let mut cfg = shipped();
    cfg.campaign.name = "small".into();
    cfg.campaign.output_dir = out.to_path_buf();
    cfg.matrix.sut_variants = vec!["det-A".into(), "det-B".into()];
    cfg.matrix.times = vec![TimeOfDay::Pm1, TimeOfDay::Am5];
    cfg.matrix.weathers = vec![Weather::Clear, Weather::HeavyFog];
    cfg.matrix.batch_size = 4;
    cfg
}

pub fn write_config(cfg: &CampaignConfig, path: &Path) {
    std::fs::write(path, cfg.to_resolved_toml().unwrap()).unwrap();
}

/// Every deterministic output file under `dir`, keyed by relative path.
pub fn outputs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    collect(dir, dir, &mut out);
    out
}

fn collect(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap().flatten() {
        let p = entry.path();
        if p.is_dir() {
            collect(root, &p, out);
        } else {
            let name = p.file_name().unwrap().to_str().unwrap();
            if matches!(name, "kpi.csv" | "verdict.txt" | "trace.ndjson" | "report.csv") {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
}

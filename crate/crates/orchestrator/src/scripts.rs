//! PBS and SLURM job-array scripts: one array task per batch.

use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::config::CampaignConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheduler {
    Pbs,
    Slurm,
}

impl Scheduler {
    /// Shell variable holding the 1-based array index.
    pub fn index_var(self) -> &'static str {
        match self {
            Scheduler::Pbs => "PBS_ARRAY_INDEX",
            Scheduler::Slurm => "SLURM_ARRAY_TASK_ID",
        }
    }
}

impl fmt::Display for Scheduler {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheduler::Pbs => "pbs",
            Scheduler::Slurm => "slurm",
        })
    }
}

impl FromStr for Scheduler {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pbs" => Ok(Scheduler::Pbs),
            "slurm" => Ok(Scheduler::Slurm),
            _ => Err(Error::Config(format!("unknown scheduler `{s}` (pbs, slurm)"))),
        }
    }
}

/// Single-quotes `s` for a POSIX shell when needed.
fn shell_quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_./:=@%+,".contains(c)) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', r"'\''"))
    }
}

/// The command every array task runs, with `index` as the batch number.
pub fn task_command(cfg: &CampaignConfig, index: &str) -> String {
    let s = &cfg.scheduler;
    let config = s.config_path.as_deref().unwrap_or("campaign.toml");
    format!(
        "{} run --config {} --mode {} --workers {} --batch {index} --out {}",
        shell_quote(&s.binary),
        shell_quote(config),
        cfg.campaign.mode,
        s.cpus_per_task,
        shell_quote(&cfg.campaign.output_dir.display().to_string()),
    )
}

/// Job-array script for `scheduler` with one task per batch.
pub fn emit_job_script(cfg: &CampaignConfig, scheduler: Scheduler) -> Result<String> {
    let batches = cfg.batches()?.len();
    if batches == 0 {
        return Err(Error::Config("campaign has no cases; nothing to submit".into()));
    }
    let s = &cfg.scheduler;
    let name = &cfg.campaign.name;
    let cmd = task_command(cfg, &format!("\"${}\"", scheduler.index_var()));
    let mut out = String::from("#!/bin/bash\n");
    match scheduler {
        Scheduler::Slurm => {
            let _ = writeln!(out, "#SBATCH --job-name={name}");
            let _ = writeln!(out, "#SBATCH --array=1-{batches}");
            let _ = writeln!(out, "#SBATCH --nodes=1");
            let _ = writeln!(out, "#SBATCH --ntasks=1");
            let _ = writeln!(out, "#SBATCH --cpus-per-task={}", s.cpus_per_task);
            let _ = writeln!(out, "#SBATCH --mem={}G", s.mem_gb);
            let _ = writeln!(out, "#SBATCH --time={}", s.walltime);
            let _ = writeln!(out, "#SBATCH --output={}/{name}_%A_%a.out", s.log_dir);
            if let Some(p) = &s.partition {
                let _ = writeln!(out, "#SBATCH --partition={p}");
            }
            out.push_str("\nset -euo pipefail\n");
            let _ = writeln!(out, "cd \"${{SLURM_SUBMIT_DIR:-.}}\"");
        }
        Scheduler::Pbs => {
            let _ = writeln!(out, "#PBS -N {name}");
            let _ = writeln!(out, "#PBS -J 1-{batches}");
            let _ = writeln!(out, "#PBS -l select=1:ncpus={}:mem={}gb", s.cpus_per_task, s.mem_gb);
            let _ = writeln!(out, "#PBS -l walltime={}", s.walltime);
            let _ = writeln!(out, "#PBS -j oe");
            let _ = writeln!(out, "#PBS -o {}/", s.log_dir);
            if let Some(q) = &s.queue {
                let _ = writeln!(out, "#PBS -q {q}");
            }
            out.push_str("\nset -euo pipefail\n");
            let _ = writeln!(out, "cd \"${{PBS_O_WORKDIR:-.}}\"");
        }
    }
    let _ = writeln!(out, "{cmd}");
    Ok(out)
}

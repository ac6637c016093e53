#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn trainchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trainchain")).args(args).output().expect("binary runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A scenario with `miners` honest miners unless `behaviors` says otherwise.
pub fn config_toml(seed: u64, cycles: u64, behaviors: &[&str], baseline: bool) -> String {
    let mut s = format!("seed = {seed}\ncycles = {cycles}\n\n");
    for b in behaviors {
        s += &format!("[[miners]]\nbehavior = \"{b}\"\ncompute_budget = 1.0\n\n");
    }
    s += "[model]\narchitecture = \"linear\"\ninput_dim = 4\n\n\
          [dataset]\nn_examples = 120\nnoise_std = 0.1\n\n\
          [cycle]\nsteps = 10\nalpha = 0.5\nreward = 50\nlearning_rate = 0.05\nbatch_size = 16\n\n";
    s += &format!(
        "[pow_baseline]\nenabled = {baseline}\ndifficulty_bits = 6\nmax_attempts = 1000000\n\n[output]\ndir = \"out\"\n"
    );
    s
}

pub fn write_config(dir: &Path, name: &str, toml: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, toml).unwrap();
    path
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

//! Run manifests: every CLI run records its command line, every effective
//! parameter (defaults included), input digests, and produced artifacts, so
//! the run can be reproduced byte-identically.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// 64-bit FNV-1a of a file's bytes, hex-encoded; cheap input digest.
pub fn fnv64_hex(path: &Path) -> Result<String> {
    let data = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut h: u64 = 0xcbf29ce484222325;
    for b in data {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    Ok(format!("{h:016x}"))
}

#[derive(Debug, Clone, Default)]
pub struct Manifest {
    command: String,
    argv: Vec<String>,
    params: Vec<(String, String)>,
    inputs: Vec<(String, String)>,
    outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Manifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            ..Default::default()
        }
    }

    pub fn param(&mut self, key: &str, value: impl std::fmt::Display) {
        self.params.push((key.to_string(), value.to_string()));
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs
            .push((path.display().to_string(), fnv64_hex(path)?));
        Ok(())
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        out.push_str("# egmsigma run manifest\n");
        out.push_str(&format!("command = {}\n", self.command));
        out.push_str(&format!("argv = {}\n", self.argv.join(" ")));
        for (k, v) in &self.params {
            out.push_str(&format!("param.{k} = {v}\n"));
        }
        for (p, h) in &self.inputs {
            out.push_str(&format!("input = {p} fnv64:{h}\n"));
        }
        for o in &self.outputs {
            out.push_str(&format!("output = {o}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Read back the `argv` line of a written manifest.
    pub fn read_argv(path: &Path) -> Result<Vec<String>> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("argv = ") {
                return Ok(rest.split_whitespace().map(str::to_string).collect());
            }
        }
        Err(Error::Parse {
            path: path.display().to_string(),
            context: "manifest".into(),
            detail: "no argv line".into(),
        })
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Experiment, Format};

/// Serialized body of one command, ready to be written.
pub struct Artifact {
    pub body: Vec<u8>,
}

/// Rows as CSV (schema comment line, header, rows) or as a JSON document
/// `{"schema": …, "rows": […]}`.
pub fn table<T: Serialize>(
    schema: &'static str,
    rows: &[T],
    format: Format,
) -> Result<Artifact, crate::Failure> {
    let mut body = Vec::new();
    match format {
        Format::Csv => {
            writeln!(body, "# pflab-{schema} v1")?;
            let mut w = csv::Writer::from_writer(&mut body);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let doc = serde_json::json!({ "schema": format!("pflab-{schema} v1"), "rows": rows });
            serde_json::to_writer_pretty(&mut body, &doc)?;
            body.push(b'\n');
        }
    }
    Ok(Artifact { body })
}

/// A structured report; CSV is not available for these.
pub fn report<T: Serialize>(schema: &'static str, value: &T) -> Result<Artifact, crate::Failure> {
    let doc = serde_json::json!({ "schema": format!("pflab-{schema} v1"), "report": value });
    let mut body = serde_json::to_vec_pretty(&doc)?;
    body.push(b'\n');
    Ok(Artifact { body })
}

#[derive(Serialize)]
pub struct Manifest<'a> {
    pub schema: &'static str,
    pub command: &'a str,
    pub config: &'a Experiment,
    pub config_sha256: String,
    pub output: Option<&'a Path>,
    pub output_sha256: String,
    pub pflab_version: &'static str,
    pub cli_version: &'static str,
    pub threads: usize,
    pub started_unix: u64,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn config_hash(exp: &Experiment) -> String {
    sha256_hex(&serde_json::to_vec(exp).expect("experiment serializes"))
}

/// Where the manifest goes: an explicit path, else next to the output file.
pub fn manifest_path(exp: &Experiment) -> Option<PathBuf> {
    exp.manifest.clone().or_else(|| {
        exp.output.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".manifest.json");
            PathBuf::from(s)
        })
    })
}

pub fn write_outputs(
    exp: &Experiment,
    art: &Artifact,
    started: SystemTime,
    wall: Duration,
) -> Result<(), crate::Failure> {
    match &exp.output {
        Some(p) => std::fs::write(p, &art.body)?,
        None => std::io::stdout().write_all(&art.body)?,
    }
    if let Some(mp) = manifest_path(exp) {
        let m = Manifest {
            schema: "pflab-manifest v1",
            command: exp.command.name(),
            config: exp,
            config_sha256: config_hash(exp),
            output: exp.output.as_deref(),
            output_sha256: sha256_hex(&art.body),
            pflab_version: pflab::VERSION,
            cli_version: env!("CARGO_PKG_VERSION"),
            threads: rayon::current_num_threads(),
            started_unix: started
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            wall_time_s: wall.as_secs_f64(),
        };
        let mut text = serde_json::to_vec_pretty(&m)?;
        text.push(b'\n');
        std::fs::write(mp, text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        a: usize,
        b: f64,
    }

    #[test]
    fn csv_has_schema_line_and_header() {
        let art = table("demo", &[Row { a: 1, b: 0.5 }], Format::Csv).unwrap();
        assert_eq!(
            String::from_utf8(art.body).unwrap(),
            "# pflab-demo v1\na,b\n1,0.5\n"
        );
    }

    #[test]
    fn json_wraps_rows() {
        let art = table("demo", &[Row { a: 2, b: -1.0 }], Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&art.body).unwrap();
        assert_eq!(v["schema"], "pflab-demo v1");
        assert_eq!(v["rows"][0]["a"], 2);
    }

    #[test]
    fn hash_is_stable_hex() {
        let h = sha256_hex(b"abc");
        assert_eq!(
            h,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}

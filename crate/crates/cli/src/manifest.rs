//! Flat `key=value` run manifests, sufficient to replay a command.

use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunManifest {
    pub command: String,
    /// Every flag of the command with its effective value, in definition order.
    pub flags: Vec<(String, String)>,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<PathBuf>,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('\n', "\\n")
}

fn unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

impl RunManifest {
    pub fn flag(&self, name: &str) -> Option<&str> {
        self.flags
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("command={}", escape(&self.command)),
            format!("version={}", escape(&self.version)),
            format!("timestamp={}", self.timestamp),
            format!("seed={}", self.seed),
        ];
        lines.extend(
            self.flags
                .iter()
                .map(|(k, v)| format!("flag.{k}={}", escape(v))),
        );
        lines.extend(
            self.outputs
                .iter()
                .map(|p| format!("output={}", escape(&p.to_string_lossy()))),
        );
        lines.join("\n") + "\n"
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let fail = |line: usize, message: String| CliError::Manifest {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut command = None;
        let mut version = String::new();
        let mut timestamp = 0;
        let mut seed = 0;
        let mut flags = Vec::new();
        let mut outputs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail(idx + 1, "expected key=value".into()))?;
            let value = unescape(value);
            match key {
                "command" => command = Some(value),
                "version" => version = value,
                "timestamp" => {
                    timestamp = value
                        .parse()
                        .map_err(|_| fail(idx + 1, format!("bad timestamp {value:?}")))?
                }
                "seed" => {
                    seed = value
                        .parse()
                        .map_err(|_| fail(idx + 1, format!("bad seed {value:?}")))?
                }
                "output" => outputs.push(PathBuf::from(value)),
                _ => match key.strip_prefix("flag.") {
                    Some(name) => flags.push((name.to_string(), value)),
                    None => return Err(fail(idx + 1, format!("unknown key {key:?}"))),
                },
            }
        }
        Ok(Self {
            command: command.ok_or_else(|| fail(0, "missing command".into()))?,
            flags,
            seed,
            version,
            timestamp,
            outputs,
        })
    }

    /// `<primary output>.manifest`.
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut s = primary.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let m = RunManifest {
            command: "sweep".into(),
            flags: vec![
                ("n-list".into(), "100,200".into()),
                ("out".into(), "odd\\name\nx.csv".into()),
                ("csv-only".into(), "false".into()),
            ],
            seed: 9,
            version: "0.1.0".into(),
            timestamp: 1_700_000_000,
            outputs: vec![PathBuf::from("a.csv")],
        };
        let back = RunManifest::parse(&m.to_text(), Path::new("m")).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.flag("n-list"), Some("100,200"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(RunManifest::parse("command=x\nnonsense\n", Path::new("m")).is_err());
        assert!(RunManifest::parse("flag.a=1\n", Path::new("m")).is_err());
        assert!(RunManifest::parse("command=x\nbogus=1\n", Path::new("m")).is_err());
    }

    #[test]
    fn manifest_sits_next_to_output() {
        assert_eq!(
            RunManifest::path_for(Path::new("dir/out.csv")),
            PathBuf::from("dir/out.csv.manifest")
        );
    }
}

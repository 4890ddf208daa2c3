//! External systems behind a line protocol on stdin/stdout.
//!
//! Request: `STEP x1 ... xn SEED s`. Response: `OK y1 ... yn`. Responses
//! arrive in request order; anything else is a protocol failure.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::BlackBoxSystem;
use crate::error::{Error, Result};

/// Requests written before reading their responses; keeps both pipes well
/// below their kernel buffer size.
const PIPELINE_DEPTH: usize = 128;

pub struct PluginSystem {
    command: String,
    dimension: usize,
    io: Mutex<PluginIo>,
}

struct PluginIo {
    child: Child,
    stdin: Option<BufWriter<ChildStdin>>,
    stdout: BufReader<ChildStdout>,
    line: String,
    request: String,
}

impl PluginSystem {
    /// Spawns `command` (whitespace-separated program and arguments).
    pub fn spawn(command: &str, dimension: usize) -> Result<Self> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| Error::Plugin("empty plugin command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Plugin(format!("cannot start `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(PluginSystem {
            command: command.to_string(),
            dimension,
            io: Mutex::new(PluginIo {
                child,
                stdin: Some(BufWriter::new(stdin)),
                stdout: BufReader::new(stdout),
                line: String::new(),
                request: String::new(),
            }),
        })
    }
}

impl PluginIo {
    fn round_trip(&mut self, x: &[f64], seeds: &[u64], out: &mut [f64], n: usize) -> Result<()> {
        let stdin = self
            .stdin
            .as_mut()
            .ok_or_else(|| Error::Plugin("plugin stdin closed".into()))?;
        self.request.clear();
        for &seed in seeds {
            self.request.push_str("STEP");
            for v in x {
                write!(self.request, " {v:?}").expect("write to string");
            }
            writeln!(self.request, " SEED {seed}").expect("write to string");
        }
        stdin
            .write_all(self.request.as_bytes())
            .and_then(|_| stdin.flush())
            .map_err(|e| Error::Plugin(format!("write failed: {e}")))?;
        for chunk in out.chunks_exact_mut(n).take(seeds.len()) {
            self.line.clear();
            let read = self
                .stdout
                .read_line(&mut self.line)
                .map_err(|e| Error::Plugin(format!("read failed: {e}")))?;
            if read == 0 {
                return Err(Error::Plugin("plugin closed its output".into()));
            }
            parse_response(self.line.trim_end(), chunk)?;
        }
        Ok(())
    }
}

fn parse_response(line: &str, out: &mut [f64]) -> Result<()> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("OK") {
        return Err(Error::Plugin(format!("unexpected response `{line}`")));
    }
    let mut count = 0;
    for tok in tokens {
        if count == out.len() {
            return Err(Error::Plugin(format!("too many values in `{line}`")));
        }
        let v: f64 = tok
            .parse()
            .map_err(|_| Error::Plugin(format!("bad number `{tok}` in `{line}`")))?;
        if !v.is_finite() {
            return Err(Error::Plugin(format!("non-finite successor in `{line}`")));
        }
        out[count] = v;
        count += 1;
    }
    if count != out.len() {
        return Err(Error::Plugin(format!(
            "expected {} values, got {count} in `{line}`",
            out.len()
        )));
    }
    Ok(())
}

impl BlackBoxSystem for PluginSystem {
    fn state_dimension(&self) -> usize {
        self.dimension
    }

    fn step_into(&self, x: &[f64], noise_seed: u64, out: &mut [f64]) -> Result<()> {
        self.step_many_into(x, &[noise_seed], out)
    }

    fn step_many_into(&self, x: &[f64], seeds: &[u64], out: &mut [f64]) -> Result<()> {
        let n = self.dimension;
        let mut io = self
            .io
            .lock()
            .map_err(|_| Error::Plugin("plugin lock poisoned".into()))?;
        for (block, out_block) in seeds
            .chunks(PIPELINE_DEPTH)
            .zip(out.chunks_mut(PIPELINE_DEPTH * n))
        {
            io.round_trip(x, block, out_block, n)?;
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!("plugin({})", self.command)
    }
}

impl Drop for PluginSystem {
    fn drop(&mut self) {
        if let Ok(io) = self.io.get_mut() {
            // EOF on stdin asks the plugin to exit
            io.stdin.take();
            let deadline = Instant::now() + Duration::from_secs(2);
            loop {
                match io.child.try_wait() {
                    Ok(Some(_)) => break,
                    Ok(None) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(5)),
                    _ => {
                        let _ = io.child.kill();
                        let _ = io.child.wait();
                        break;
                    }
                }
            }
        }
    }
}

/// Serves `sys` over the plugin protocol until EOF. Malformed requests get
/// an `ERR` line.
pub fn serve_plugin<S: BlackBoxSystem + ?Sized>(
    sys: &S,
    input: impl BufRead,
    output: impl Write,
) -> Result<()> {
    let n = sys.state_dimension();
    let mut output = BufWriter::new(output);
    let mut next = vec![0.0; n];
    for line in input.lines() {
        let line = line?;
        match parse_request(&line, n) {
            Ok((x, seed)) => {
                sys.step_into(&x, seed, &mut next)?;
                output.write_all(b"OK")?;
                for v in &next {
                    write!(output, " {v:?}")?;
                }
                output.write_all(b"\n")?;
            }
            Err(msg) => writeln!(output, "ERR {msg}")?,
        }
        output.flush()?;
    }
    Ok(())
}

fn parse_request(line: &str, n: usize) -> std::result::Result<(Vec<f64>, u64), String> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != n + 3 || tokens[0] != "STEP" || tokens[n + 1] != "SEED" {
        return Err(format!("expected `STEP x1..x{n} SEED s`"));
    }
    let x = tokens[1..=n]
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err("non-finite state".into());
    }
    let seed = tokens[n + 2]
        .parse::<u64>()
        .map_err(|_| format!("bad seed `{}`", tokens[n + 2]))?;
    Ok((x, seed))
}

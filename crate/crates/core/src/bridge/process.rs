use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde_json::Value;

use super::{BridgeError, Detector, DetectorKind, DetectorRequest, DetectorResponse};

/// Request/response over any line reader and writer pair.
pub struct StdioConnection<R, W> {
    reader: R,
    writer: W,
}

impl<R: BufRead, W: Write> StdioConnection<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self { reader, writer }
    }
}

fn write_request<W: Write>(writer: &mut W, req: &DetectorRequest) -> Result<(), BridgeError> {
    let mut line = serde_json::to_string(req).expect("request serializes");
    line.push('\n');
    writer.write_all(line.as_bytes()).and_then(|_| writer.flush()).map_err(|e| BridgeError::BackendExit(format!("write failed: {e}")))
}

fn parse_response(line: &str) -> Result<DetectorResponse, BridgeError> {
    serde_json::from_str(line.trim_end_matches(['\n', '\r'])).map_err(|e| BridgeError::Protocol(format!("malformed response: {e}")))
}

impl<R: BufRead + Send, W: Write + Send> Detector for StdioConnection<R, W> {
    fn request(&mut self, req: &DetectorRequest) -> Result<DetectorResponse, BridgeError> {
        write_request(&mut self.writer, req)?;
        let mut line = String::new();
        let n = self.reader.read_line(&mut line).map_err(|e| BridgeError::Io(e.to_string()))?;
        if n == 0 {
            return Err(BridgeError::BackendExit("end of stream".into()));
        }
        parse_response(&line)
    }
}

/// A child process started as `<program> <args..> --serve`.
///
/// Standard output is read on a helper thread so replies can be awaited with
/// a timeout; standard error is inherited.
pub struct ProcessBackend {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl ProcessBackend {
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self, BridgeError> {
        let mut child = Command::new(program)
            .args(args)
            .arg("--serve")
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BridgeError::Unavailable(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(Self { child, stdin, lines: rx, timeout })
    }
}

impl Detector for ProcessBackend {
    fn request(&mut self, req: &DetectorRequest) -> Result<DetectorResponse, BridgeError> {
        write_request(&mut self.stdin, req)?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => parse_response(&line),
            Ok(Err(e)) => Err(BridgeError::Io(e.to_string())),
            Err(RecvTimeoutError::Timeout) => Err(BridgeError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                let status = self.child.try_wait().ok().flatten().map_or("still running".to_string(), |s| s.to_string());
                Err(BridgeError::BackendExit(format!("stdout closed ({status})")))
            }
        }
    }
}

impl Drop for ProcessBackend {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Serves `backend` over a line stream until end of input.
///
/// Requests naming an unknown kind get `ok: false` with "unsupported kind";
/// lines that are not requests get `ok: false` with the echoed id when one
/// can be recovered. Backend protocol errors are reported the same way.
pub fn serve<R: BufRead, W: Write>(backend: &mut dyn Detector, input: R, mut output: W) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Value>(&line) {
            Err(e) => DetectorResponse::error("", format!("malformed request: {e}")),
            Ok(value) => {
                let id = value.get("id").and_then(Value::as_str).unwrap_or_default().to_string();
                let kind_known = value.get("kind").and_then(Value::as_str).is_some_and(|k| k.parse::<DetectorKind>().is_ok());
                if !kind_known {
                    DetectorResponse::error(id, "unsupported kind")
                } else {
                    match serde_json::from_value::<DetectorRequest>(value) {
                        Err(e) => DetectorResponse::error(id, format!("malformed request: {e}")),
                        Ok(req) => backend.request(&req).unwrap_or_else(|e| DetectorResponse::error(id, e.to_string())),
                    }
                }
            }
        };
        output.write_all(response.to_line().as_bytes())?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}

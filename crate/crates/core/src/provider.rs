//! Transports for external model providers.
//!
//! Every provider speaks one JSON object per line: the request is written to
//! the child's stdin, the response is read back from its stdout. The HTTP
//! transport posts the same JSON body and expects the same response object.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

struct Pipes {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A long-running child process answering line-delimited JSON requests.
///
/// Requests are serialized through a mutex, so a single client can be shared
/// across threads.
pub struct SubprocessClient {
    program: String,
    pipes: Mutex<Pipes>,
}

impl SubprocessClient {
    /// Spawn `command[0]` with the remaining elements as arguments.
    pub fn spawn(command: &[String]) -> Result<Self> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("empty provider command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Provider(format!("cannot spawn `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            program: program.clone(),
            pipes: Mutex::new(Pipes {
                child,
                stdin,
                stdout,
            }),
        })
    }

    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&self, request: &Req) -> Result<Resp> {
        let mut line =
            serde_json::to_string(request).map_err(|e| Error::Provider(e.to_string()))?;
        line.push('\n');
        let mut pipes = self
            .pipes
            .lock()
            .map_err(|_| Error::Provider(format!("`{}` client poisoned", self.program)))?;
        pipes
            .stdin
            .write_all(line.as_bytes())
            .and_then(|_| pipes.stdin.flush())
            .map_err(|e| Error::Provider(format!("`{}`: write failed: {e}", self.program)))?;
        let mut response = String::new();
        let n = pipes
            .stdout
            .read_line(&mut response)
            .map_err(|e| Error::Provider(format!("`{}`: read failed: {e}", self.program)))?;
        if n == 0 {
            return Err(Error::Provider(format!(
                "`{}` closed its output",
                self.program
            )));
        }
        serde_json::from_str(&response)
            .map_err(|e| Error::Provider(format!("`{}`: bad response: {e}", self.program)))
    }
}

impl Drop for SubprocessClient {
    fn drop(&mut self) {
        if let Ok(pipes) = self.pipes.get_mut() {
            let _ = pipes.child.kill();
            let _ = pipes.child.wait();
        }
    }
}

/// JSON-over-HTTP POST client.
pub struct HttpClient {
    url: String,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            agent: ureq::AgentBuilder::new().build(),
        }
    }

    pub fn call<Req: Serialize, Resp: DeserializeOwned>(&self, request: &Req) -> Result<Resp> {
        let body = serde_json::to_value(request).map_err(|e| Error::Provider(e.to_string()))?;
        let resp = self
            .agent
            .post(&self.url)
            .send_json(body)
            .map_err(|e| Error::Provider(format!("POST {}: {e}", self.url)))?;
        resp.into_json()
            .map_err(|e| Error::Provider(format!("POST {}: bad response: {e}", self.url)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize)]
    struct Ping {
        text: String,
    }

    #[derive(Deserialize)]
    struct Pong {
        text: String,
    }

    #[test]
    fn subprocess_round_trip_through_cat() {
        // `cat` echoes each request line back, which parses as the response.
        let client = SubprocessClient::spawn(&["cat".to_string()]).unwrap();
        for word in ["one", "two"] {
            let pong: Pong = client.call(&Ping { text: word.into() }).unwrap();
            assert_eq!(pong.text, word);
        }
    }

    #[test]
    fn missing_program_is_a_provider_error() {
        let err = SubprocessClient::spawn(&["/nonexistent/provider".to_string()])
            .err()
            .unwrap();
        assert!(matches!(err, Error::Provider(_)));
        assert!(SubprocessClient::spawn(&[]).is_err());
    }
}

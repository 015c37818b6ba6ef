//! Loopback sampling service used by the remote-client and CLI tests.
#![allow(dead_code)]

pub mod oracles;

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use qafs::qubo::QuboProblem;
use qafs::samplers::exhaustive_solve;
use qafs::samplers::remote::{WireRequest, WireResponse, WireTiming};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StubMode {
    /// Solves the request exactly and reports true energies.
    Honest,
    /// Like `Honest`, but every reported energy is shifted by this amount.
    WrongEnergy(f64),
    /// Sleeps before answering.
    Hang(Duration),
    /// Answers with HTTP 500.
    ServerError,
    /// Answers 200 with a body that is not a response object.
    Garbage,
}

pub struct Stub {
    pub url: String,
    server: Arc<tiny_http::Server>,
}

impl Drop for Stub {
    fn drop(&mut self) {
        self.server.unblock();
    }
}

pub fn spawn(mode: StubMode) -> Stub {
    let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").expect("bind loopback"));
    let port = server.server_addr().to_ip().expect("ip listener").port();
    let worker = Arc::clone(&server);
    thread::spawn(move || {
        for mut request in worker.incoming_requests() {
            let mut body = String::new();
            let _ = request.as_reader().read_to_string(&mut body);
            let (status, text) = answer(mode, &body);
            let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
            let response = tiny_http::Response::from_string(text)
                .with_status_code(status)
                .with_header(header);
            let _ = request.respond(response);
        }
    });
    Stub {
        url: format!("http://127.0.0.1:{port}/sample"),
        server,
    }
}

fn answer(mode: StubMode, body: &str) -> (u16, String) {
    match mode {
        StubMode::ServerError => return (500, "{\"error\":\"boom\"}".into()),
        StubMode::Garbage => return (200, "[1, 2, 3]".into()),
        StubMode::Hang(d) => thread::sleep(d),
        _ => {}
    }
    let request: WireRequest = match serde_json::from_str(body) {
        Ok(r) => r,
        Err(e) => return (400, format!("{{\"error\":{:?}}}", e.to_string())),
    };
    let expanded = request.to_expanded().expect("well-formed request");
    let problem = QuboProblem::new(expanded.matrix.clone(), 1.0, 0.0, 1).unwrap();
    let set = exhaustive_solve(&problem).unwrap();
    let shift = match mode {
        StubMode::WrongEnergy(s) => s,
        _ => 0.0,
    };
    let response = WireResponse {
        samples: set
            .samples
            .iter()
            .map(|s| s.mask.bits().iter().map(|&b| b as u8).collect())
            .collect(),
        energies: set
            .samples
            .iter()
            .map(|s| expanded.energy(s.mask.bits()) + shift)
            .collect(),
        num_occurrences: set
            .samples
            .iter()
            .map(|_| request.num_reads.max(1))
            .collect(),
        timing: WireTiming {
            qpu_access_time_us: 1234.0,
        },
    };
    (200, serde_json::to_string(&response).unwrap())
}

use std::net::SocketAddr;
use std::sync::{Arc, RwLock};
use std::thread::JoinHandle;

use serde::de::DeserializeOwned;
use serde::Serialize;
use tiny_http::{Header, Method, Request, Response, Server};

use super::wire::*;
use super::{BackendError, SummarizationBackend};
use crate::corpus::Document;

/// A running protocol server; stops when dropped.
pub struct ServerHandle {
    addr: SocketAddr,
    server: Arc<Server>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Serve any backend over the wire protocol on `addr` (use port 0 for an
/// ephemeral port). Requests are handled one at a time.
pub fn serve<B>(backend: B, model_name: &str, addr: &str) -> std::io::Result<ServerHandle>
where
    B: SummarizationBackend + 'static,
{
    let server = Server::http(addr).map_err(std::io::Error::other)?;
    let addr = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| std::io::Error::other("server is not bound to an IP address"))?;
    let server = Arc::new(server);
    let backend = Arc::new(RwLock::new(backend));
    let model = model_name.to_string();
    let worker = Arc::clone(&server);
    let thread = std::thread::spawn(move || {
        for request in worker.incoming_requests() {
            handle(request, &backend, &model);
        }
    });
    Ok(ServerHandle {
        addr,
        server,
        thread: Some(thread),
    })
}

fn json_response<T: Serialize>(status: u16, body: &T) -> Response<std::io::Cursor<Vec<u8>>> {
    let bytes = serde_json::to_vec(body).expect("response bodies serialize");
    Response::from_data(bytes)
        .with_status_code(status)
        .with_header(Header::from_bytes("Content-Type", "application/json").expect("static header"))
}

fn error_response(status: u16, message: String) -> Response<std::io::Cursor<Vec<u8>>> {
    json_response(status, &serde_json::json!({ "error": message }))
}

fn parse<T: DeserializeOwned>(body: &str) -> Result<T, (u16, String)> {
    serde_json::from_str(body).map_err(|e| (400, format!("bad request body: {e}")))
}

fn backend_failure(e: BackendError) -> (u16, String) {
    let status = if matches!(e, BackendError::InvalidArgument(_)) {
        400
    } else {
        500
    };
    (status, e.to_string())
}

fn handle<B: SummarizationBackend>(mut request: Request, backend: &RwLock<B>, model: &str) {
    let mut body = String::new();
    if let Err(e) = request.as_reader().read_to_string(&mut body) {
        let _ = request.respond(error_response(400, e.to_string()));
        return;
    }
    let path = request.url().split('?').next().unwrap_or("").to_string();
    let result: Result<Response<_>, (u16, String)> = (|| match (request.method(), path.as_str()) {
        (Method::Get, "/health") => {
            let b = backend.read().expect("backend lock");
            Ok(json_response(
                200,
                &HealthResponse {
                    ok: true,
                    model: model.to_string(),
                    dim: b.descriptor().dim,
                },
            ))
        }
        (Method::Post, "/embed") => {
            let req: EmbedRequest = parse(&body)?;
            let b = backend.read().expect("backend lock");
            let vectors = b.embed(&req.texts).map_err(backend_failure)?;
            Ok(json_response(
                200,
                &EmbedResponse {
                    dim: b.descriptor().dim,
                    vectors,
                },
            ))
        }
        (Method::Post, "/generate") => {
            let req: GenerateRequest = parse(&body)?;
            let doc = Document::new("request", req.text, "");
            let b = backend.read().expect("backend lock");
            let batch = if req.dropout {
                b.generate_stochastic(&doc, req.n, req.seed)
                    .map_err(backend_failure)?
            } else {
                let one = b
                    .summarize(std::slice::from_ref(&doc.source))
                    .map_err(backend_failure)?;
                super::StochasticBatch {
                    doc_id: doc.id.clone(),
                    summaries: vec![one[0].clone(); req.n],
                }
            };
            Ok(json_response(
                200,
                &GenerateResponse {
                    summaries: batch.summaries,
                },
            ))
        }
        (Method::Post, "/finetune") => {
            let req: FinetuneRequest = parse(&body)?;
            if !req.reset {
                return Err((400, "only reset=true finetuning is supported".to_string()));
            }
            let pairs: Vec<(String, String)> = req
                .pairs
                .into_iter()
                .map(|p| (p.source, p.summary))
                .collect();
            let mut b = backend.write().expect("backend lock");
            let state = b
                .reset_and_finetune(&pairs, req.seed)
                .map_err(backend_failure)?;
            Ok(json_response(
                200,
                &FinetuneResponse {
                    state_version: state.fingerprint,
                },
            ))
        }
        (Method::Post, "/summarize") => {
            let req: SummarizeRequest = parse(&body)?;
            let b = backend.read().expect("backend lock");
            let summaries = b.summarize(&req.texts).map_err(backend_failure)?;
            Ok(json_response(200, &SummarizeResponse { summaries }))
        }
        _ => Err((404, format!("no route for {} {path}", request.method()))),
    })();
    let response = result.unwrap_or_else(|(status, msg)| error_response(status, msg));
    let _ = request.respond(response);
}

use super::{ProposalContext, Proposer, ProposerError};
use crate::dsl::Program;
use crate::world::svg::{render_state, strided_indices};
use crate::world::Trajectory;
use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::path::PathBuf;
use std::time::Duration;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Chat-completions URL.
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    pub retries: usize,
    /// Environment variable holding the bearer token.
    pub credential_var: String,
    /// Requests and responses are written here when set.
    pub log_dir: Option<PathBuf>,
    pub frame_stride: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            timeout_secs: 120,
            retries: 2,
            credential_var: "RATIONALE_API_KEY".into(),
            log_dir: None,
            frame_stride: 10,
        }
    }
}

/// Carries one request body to the model and returns the response body.
pub trait Transport: Send {
    fn send(&mut self, body: &Value) -> Result<Value, ProposerError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
    endpoint: String,
    token: String,
    retries: usize,
}

impl HttpTransport {
    /// Reads the credential first; nothing touches the network when it is missing.
    pub fn from_env(cfg: &RemoteConfig) -> Result<HttpTransport, ProposerError> {
        let token = std::env::var(&cfg.credential_var)
            .ok()
            .filter(|t| !t.is_empty())
            .ok_or_else(|| ProposerError::AuthMissing(cfg.credential_var.clone()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| ProposerError::Transport(e.to_string()))?;
        Ok(HttpTransport {
            client,
            endpoint: cfg.endpoint.clone(),
            token,
            retries: cfg.retries,
        })
    }
}

impl Transport for HttpTransport {
    fn send(&mut self, body: &Value) -> Result<Value, ProposerError> {
        let mut last = String::new();
        for _ in 0..=self.retries {
            let resp = self
                .client
                .post(&self.endpoint)
                .bearer_auth(&self.token)
                .json(body)
                .send();
            match resp {
                Ok(r) if r.status().is_success() => {
                    return r
                        .json()
                        .map_err(|e| ProposerError::Transport(e.to_string()));
                }
                Ok(r) => last = format!("HTTP {}", r.status()),
                Err(e) => last = e.to_string(),
            }
        }
        Err(ProposerError::Transport(last))
    }
}

/// Serves recorded responses `response_000.json`, `response_001.json`, ... in order.
pub struct ReplayTransport {
    dir: PathBuf,
    next: usize,
}

impl ReplayTransport {
    pub fn new(dir: impl Into<PathBuf>) -> ReplayTransport {
        ReplayTransport {
            dir: dir.into(),
            next: 0,
        }
    }
}

impl Transport for ReplayTransport {
    fn send(&mut self, _body: &Value) -> Result<Value, ProposerError> {
        let path = self.dir.join(format!("response_{:03}.json", self.next));
        self.next += 1;
        let text = std::fs::read_to_string(&path)
            .map_err(|e| ProposerError::Transport(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| ProposerError::Transport(format!("{}: {e}", path.display())))
    }
}

/// SVG frames of a demonstration as data URLs: every `stride`-th frame plus the last.
pub fn frame_urls(tau: &Trajectory, stride: usize) -> Vec<String> {
    let engine = base64::engine::general_purpose::STANDARD;
    strided_indices(tau.len(), stride)
        .into_iter()
        .map(|i| {
            let svg = render_state(&tau.states[i]);
            format!("data:image/svg+xml;base64,{}", engine.encode(svg))
        })
        .collect()
}

const INSTRUCTIONS: &str = "\
You watch short recordings of a robot arranging flat objects on a square table and guess the \
instruction it was following. Write each guess as a program in the language below, one program \
per fenced code block.

Regions: Left, Right, Top, Bottom (the halves of the table), Corner (the four corners), Middle \
(the centre). A place lists regions that must all hold, e.g. (at Top Right Corner). Middle is \
only used alone.

Predicates: (color red|green|blue|yellow|purple|orange|pink), \
(shape circle|box|square|rectangle|triangle), (big area|perimeter|extent), \
(small area|perimeter|extent), (and p q), (or p q), (not p).
Selectors: all, (filter p), (largest m S), (smallest m S), (most-numerous-shape S), \
(odd-color S), (except S T).
Conditions: (exists S), (count>= S n).
Programs: (achieve (for S (at R ...)) ...), (seq P Q ...), (if C P Q), \
(sort-by m asc|desc S (at ...) (at ...) ...).

Examples:
```
(achieve (for (filter (color red)) (at Left)))
```
```
(seq (achieve (for (filter (shape box)) (at Top))) (achieve (for (filter (shape circle)) (at Bottom))))
```
```
(if (exists (filter (shape triangle))) (achieve (for (filter (shape triangle)) (at Middle))) (achieve (for all (at Right))))
```";

/// Chat-completions proposer. One request per call; frames are rendered once up front.
pub struct RemoteProposer {
    cfg: RemoteConfig,
    transport: Box<dyn Transport>,
    frames: Vec<Vec<String>>,
    calls: usize,
    diagnostics: Vec<String>,
}

impl RemoteProposer {
    pub fn new(
        cfg: RemoteConfig,
        transport: Box<dyn Transport>,
        demos: &[Trajectory],
    ) -> RemoteProposer {
        let frames = demos
            .iter()
            .map(|t| frame_urls(t, cfg.frame_stride))
            .collect();
        RemoteProposer {
            cfg,
            transport,
            frames,
            calls: 0,
            diagnostics: Vec::new(),
        }
    }

    /// Live HTTP proposer; fails with `AuthMissing` if the credential variable is unset.
    pub fn http(cfg: RemoteConfig, demos: &[Trajectory]) -> Result<RemoteProposer, ProposerError> {
        let t = HttpTransport::from_env(&cfg)?;
        Ok(RemoteProposer::new(cfg, Box::new(t), demos))
    }

    pub fn request(&self, ctx: &ProposalContext) -> Value {
        let mut content = vec![json!({
            "type": "text",
            "text": format!("{} demonstration(s) follow, each as a sequence of frames.", self.frames.len()),
        })];
        for (k, frames) in self.frames.iter().enumerate() {
            content.push(json!({"type": "text", "text": format!("Demonstration {}:", k + 1)}));
            for url in frames {
                content.push(json!({"type": "image_url", "image_url": {"url": url}}));
            }
        }
        let mut ask = String::new();
        if !ctx.hypotheses.is_empty() {
            ask.push_str(
                "Earlier guesses were checked against the recordings. Each weight says how well \
                 the guess explains the robot's choices, taking into account that the robot \
                 moves efficiently and may have to clear obstacles out of the way:\n",
            );
            for h in &ctx.hypotheses {
                ask.push_str(&format!("{:.4}  {}\n", h.score, h.program));
            }
            ask.push('\n');
        }
        ask.push_str(&format!(
            "Give {} new, distinct guesses, one fenced block each.",
            ctx.n
        ));
        content.push(json!({"type": "text", "text": ask}));
        json!({
            "model": self.cfg.model,
            "messages": [
                {"role": "system", "content": INSTRUCTIONS},
                {"role": "user", "content": content},
            ],
        })
    }

    fn log(&self, name: &str, v: &Value) {
        if let Some(dir) = &self.cfg.log_dir {
            let _ = std::fs::create_dir_all(dir);
            let _ = std::fs::write(
                dir.join(format!("{name}_{:03}.json", self.calls)),
                serde_json::to_string_pretty(v).unwrap_or_default(),
            );
        }
    }
}

/// Contents of every fenced block in `text`.
pub fn fenced_blocks(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        if !line.trim_start().starts_with("```") {
            continue;
        }
        let mut body = Vec::new();
        let mut closed = false;
        for l in lines.by_ref() {
            if l.trim_start().starts_with("```") {
                closed = true;
                break;
            }
            body.push(l);
        }
        if closed {
            out.push(body.join("\n"));
        }
    }
    out
}

/// Parse every fenced block; malformed ones become diagnostics.
pub fn parse_response(text: &str) -> (Vec<Program>, Vec<String>) {
    let mut programs = Vec::new();
    let mut diagnostics = Vec::new();
    for (k, block) in fenced_blocks(text).iter().enumerate() {
        match Program::parse(block.trim()) {
            Ok(p) => programs.push(p),
            Err(e) => diagnostics.push(format!("block {k}: {e}")),
        }
    }
    (programs, diagnostics)
}

fn message_text(v: &Value) -> String {
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string()
}

impl Proposer for RemoteProposer {
    fn propose(&mut self, ctx: &ProposalContext) -> Result<Vec<Program>, ProposerError> {
        let body = self.request(ctx);
        self.log("request", &body);
        let resp = self.transport.send(&body);
        if let Ok(r) = &resp {
            self.log("response", r);
        }
        self.calls += 1;
        let (programs, diagnostics) = parse_response(&message_text(&resp?));
        self.diagnostics = diagnostics.clone();
        if programs.is_empty() {
            return Err(ProposerError::ParseFailure(diagnostics));
        }
        Ok(programs)
    }

    fn take_diagnostics(&mut self) -> Vec<String> {
        std::mem::take(&mut self.diagnostics)
    }
}

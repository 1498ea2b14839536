use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use assistdlo::assist::AssistParams;
use assistdlo::harness::{HarnessError, Scenario};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::json;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::{oneshot, watch};

use crate::session::{perceive, PerceptionRequest, PerceptionResult, Session};
use crate::wire::{ClientMessage, ServerMessage};

/// Control ticks per broadcast cycle.
const BROADCAST_NUM: u64 = 3;
const BROADCAST_DEN: u64 = 10;
/// A control loop this many periods late skips ahead instead of bursting.
const MAX_LAG_TICKS: u32 = 10;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot listen on {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
    #[error(transparent)]
    Scenario(#[from] HarnessError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub scenario: Scenario,
}

enum Event {
    Client(ClientMessage),
    Disconnected,
}

struct Shared {
    session: String,
    scenario: Scenario,
    /// Latest command per arm; the control thread takes it each tick.
    mailboxes: [Mutex<Option<ClientMessage>>; 2],
    events: mpsc::Sender<Event>,
    /// Serialized `state` message of the last broadcast tick.
    snapshot: watch::Receiver<Arc<str>>,
    /// First control tick that will see a message arriving now.
    ingest_tick: AtomicU64,
    clients: AtomicUsize,
    stop: AtomicBool,
}

impl Shared {
    fn reply(&self, msg: &ServerMessage) -> String {
        serde_json::to_string(msg).expect("server messages serialize")
    }

    fn handle_text(&self, text: &str) -> String {
        let msg = match ClientMessage::parse(text) {
            Ok(m) => m,
            Err((seq, message)) => {
                return self.reply(&ServerMessage::Error {
                    session: self.session.clone(),
                    seq,
                    message,
                })
            }
        };
        let seq = msg.seq();
        match msg {
            ClientMessage::Command { arm, .. } => {
                *self.mailboxes[arm.index()].lock().expect("mailbox") = Some(msg);
            }
            other => {
                // the receiver only goes away at shutdown
                let _ = self.events.send(Event::Client(other));
            }
        }
        self.reply(&ServerMessage::Ack {
            session: self.session.clone(),
            seq,
            tick: self.ingest_tick.load(Ordering::SeqCst),
        })
    }
}

fn publish_due(tick: u64) -> bool {
    tick * BROADCAST_NUM % BROADCAST_DEN < BROADCAST_NUM
}

fn state_json(s: &Session) -> Arc<str> {
    serde_json::to_string(&ServerMessage::State(Box::new(s.snapshot())))
        .expect("state serializes")
        .into()
}

fn perception_loop(rx: mpsc::Receiver<PerceptionRequest>, done: Arc<Mutex<Option<PerceptionResult>>>, params: AssistParams<f64>) {
    let mut cache = None;
    while let Ok(req) = rx.recv() {
        let res = perceive(req, &mut cache, &params);
        *done.lock().expect("perception slot") = Some(res);
    }
}

fn control_loop(shared: Arc<Shared>, mut session: Session, events: mpsc::Receiver<Event>, snapshot: watch::Sender<Arc<str>>) {
    let (req_tx, req_rx) = mpsc::sync_channel::<PerceptionRequest>(1);
    let done = Arc::new(Mutex::new(None));
    let perception = {
        let done = done.clone();
        let params = *session.params();
        std::thread::spawn(move || perception_loop(req_rx, done, params))
    };
    let period = Duration::from_secs_f64(session.params().cbf.dt);
    let mut deadline = Instant::now();
    while !shared.stop.load(Ordering::SeqCst) {
        shared.ingest_tick.store(session.tick(), Ordering::SeqCst);
        while let Ok(ev) = events.try_recv() {
            match ev {
                Event::Client(m) => {
                    let _ = session.apply(&m);
                }
                Event::Disconnected => session.client_lost(),
            }
        }
        for slot in &shared.mailboxes {
            let msg = slot.lock().expect("mailbox").take();
            if let Some(m) = msg {
                let _ = session.apply(&m);
            }
        }
        let res = done.lock().expect("perception slot").take();
        if let Some(r) = res {
            session.install(r);
        }
        if session.perception_due() {
            // a busy perception stage skips this update
            let _ = req_tx.try_send(session.perception_request());
        }
        let tick = session.tick();
        if let Err(e) = session.step() {
            session.reset();
            session.set_fault(e.to_string());
        }
        if publish_due(tick) {
            snapshot.send_replace(state_json(&session));
        }

        deadline += period;
        let now = Instant::now();
        if deadline > now {
            std::thread::sleep(deadline - now);
        } else if now - deadline > period * MAX_LAG_TICKS {
            deadline = now;
        }
    }
    drop(req_tx);
    let _ = perception.join();
}

async fn client_loop(mut socket: WebSocket, shared: Arc<Shared>) {
    shared.clients.fetch_add(1, Ordering::SeqCst);
    let mut rx = shared.snapshot.clone();
    rx.mark_changed();
    loop {
        tokio::select! {
            changed = rx.changed() => {
                if changed.is_err() {
                    break;
                }
                let text = rx.borrow_and_update().clone();
                if socket.send(Message::Text(text.as_ref().into())).await.is_err() {
                    break;
                }
            }
            msg = socket.recv() => {
                let reply = match msg {
                    Some(Ok(Message::Text(t))) => shared.handle_text(t.as_str()),
                    Some(Ok(Message::Binary(_))) => shared.reply(&ServerMessage::Error {
                        session: shared.session.clone(),
                        seq: None,
                        message: "binary frames are not accepted".into(),
                    }),
                    Some(Ok(Message::Close(_))) | Some(Err(_)) | None => break,
                    Some(Ok(_)) => continue,
                };
                if socket.send(Message::Text(reply.into())).await.is_err() {
                    break;
                }
            }
        }
    }
    if shared.clients.fetch_sub(1, Ordering::SeqCst) == 1 {
        let _ = shared.events.send(Event::Disconnected);
    }
}

async fn ws_route(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| client_loop(socket, shared))
}

async fn health(State(shared): State<Arc<Shared>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "session": shared.session,
        "tick": shared.ingest_tick.load(Ordering::SeqCst),
        "clients": shared.clients.load(Ordering::SeqCst),
    }))
}

async fn scenario(State(shared): State<Arc<Shared>>) -> Json<Scenario> {
    Json(shared.scenario.clone())
}

async fn reset(State(shared): State<Arc<Shared>>) -> String {
    shared.handle_text(r#"{"type":"reset"}"#)
}

/// A running server. Dropping it stops the control loop and the listener.
pub struct ServerHandle {
    pub addr: SocketAddr,
    shared: Arc<Shared>,
    control: Option<JoinHandle<()>>,
    shutdown: Option<oneshot::Sender<()>>,
    server: Option<tokio::task::JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    pub fn session_id(&self) -> &str {
        &self.shared.session
    }

    fn stop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(h) = self.control.take() {
            let _ = h.join();
        }
    }

    /// Stops the loops and waits for the listener to close.
    pub async fn shutdown(mut self) -> Result<(), ServiceError> {
        self.stop();
        if let Some(s) = self.server.take() {
            s.await.map_err(|e| std::io::Error::other(e.to_string()))??;
        }
        Ok(())
    }

    /// Waits until the listener fails.
    pub async fn wait(mut self) -> Result<(), ServiceError> {
        if let Some(s) = self.server.take() {
            s.await.map_err(|e| std::io::Error::other(e.to_string()))??;
        }
        Ok(())
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Binds, starts the control and perception threads and serves in the
/// background. Must be called inside a Tokio runtime.
pub async fn spawn(cfg: ServiceConfig) -> Result<ServerHandle, ServiceError> {
    let id = uuid::Uuid::new_v4().to_string();
    let session = Session::new(id.clone(), cfg.scenario.clone())?;
    let listener = TcpListener::bind(cfg.addr).await.map_err(|source| ServiceError::Bind { addr: cfg.addr, source })?;
    let addr = listener.local_addr()?;

    let (snap_tx, snap_rx) = watch::channel(state_json(&session));
    let (ev_tx, ev_rx) = mpsc::channel();
    let shared = Arc::new(Shared {
        session: id,
        scenario: cfg.scenario,
        mailboxes: [Mutex::new(None), Mutex::new(None)],
        events: ev_tx,
        snapshot: snap_rx,
        ingest_tick: AtomicU64::new(0),
        clients: AtomicUsize::new(0),
        stop: AtomicBool::new(false),
    });
    let control = {
        let shared = shared.clone();
        std::thread::Builder::new()
            .name("control".into())
            .spawn(move || control_loop(shared, session, ev_rx, snap_tx))?
    };

    let app = Router::new()
        .route("/ws", get(ws_route))
        .route("/health", get(health))
        .route("/scenario", get(scenario))
        .route("/reset", post(reset))
        .with_state(shared.clone());
    let (tx, rx) = oneshot::channel();
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = rx.await;
            })
            .await
    });
    Ok(ServerHandle {
        addr,
        shared,
        control: Some(control),
        shutdown: Some(tx),
        server: Some(server),
    })
}

/// Runs the service until the listener fails.
pub async fn serve(cfg: ServiceConfig) -> Result<Infallible, ServiceError> {
    let handle = spawn(cfg).await?;
    eprintln!("listening on {} (session {})", handle.addr, handle.session_id());
    handle.wait().await?;
    Err(std::io::Error::other("listener closed").into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn broadcast_schedule() {
        let due: Vec<u64> = (0..100).filter(|&t| publish_due(t)).collect();
        assert_eq!(due.len(), 30);
        assert_eq!(&due[..4], &[0, 4, 7, 10]);
        assert!(due.windows(2).all(|w| w[1] - w[0] <= 4));
    }
}

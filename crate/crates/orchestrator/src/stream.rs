//! Live status stream: newline-delimited JSON over TCP.
//!
//! The first line a subscriber receives is the campaign metadata record;
//! after that it gets every published line from its connection time onward.
//! Each subscriber has a bounded queue and is dropped when the queue fills,
//! so a slow client never stalls the campaign.

use std::io::{BufWriter, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use crate::error::{Error, Result};

/// Lines buffered per subscriber before it is dropped.
pub const SUBSCRIBER_BUFFER: usize = 4096;

type Subscribers = Arc<Mutex<Vec<SyncSender<Arc<str>>>>>;

pub struct StreamServer {
    addr: SocketAddr,
    subscribers: Subscribers,
    shutdown: Arc<AtomicBool>,
    acceptor: Option<JoinHandle<()>>,
}

impl StreamServer {
    /// Binds immediately so that an unusable address fails before any case
    /// starts. `metadata` is the first line sent to every subscriber.
    pub fn bind(addr: &str, metadata: String) -> Result<Self> {
        let listener = TcpListener::bind(addr)
            .map_err(|e| Error::Execution(format!("cannot bind stream server to {addr}: {e}")))?;
        let local = listener.local_addr().map_err(|e| Error::io(addr, e))?;
        let subscribers: Subscribers = Arc::new(Mutex::new(Vec::new()));
        let shutdown = Arc::new(AtomicBool::new(false));
        let subs = Arc::clone(&subscribers);
        let stop = Arc::clone(&shutdown);
        let metadata: Arc<str> = metadata.into();
        let acceptor = std::thread::spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                match conn {
                    Ok(stream) => {
                        let (tx, rx) = sync_channel::<Arc<str>>(SUBSCRIBER_BUFFER);
                        let _ = tx.try_send(Arc::clone(&metadata));
                        subs.lock().unwrap_or_else(|e| e.into_inner()).push(tx);
                        std::thread::spawn(move || serve(stream, rx));
                    }
                    Err(e) => log::warn!("stream accept failed: {e}"),
                }
            }
        });
        log::info!("live stream listening on {local}");
        Ok(StreamServer { addr: local, subscribers, shutdown, acceptor: Some(acceptor) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn subscriber_count(&self) -> usize {
        self.subscribers.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    /// Queues `line` for every subscriber without blocking.
    pub fn publish(&self, line: &str) {
        let mut subs = self.subscribers.lock().unwrap_or_else(|e| e.into_inner());
        if subs.is_empty() {
            return;
        }
        let line: Arc<str> = line.into();
        subs.retain(|tx| match tx.try_send(Arc::clone(&line)) {
            Ok(()) => true,
            Err(TrySendError::Full(_)) => {
                log::warn!("dropping slow stream subscriber");
                false
            }
            Err(TrySendError::Disconnected(_)) => false,
        });
    }

    /// Stops accepting, closes every subscriber queue and lets the writers
    /// drain what they already hold.
    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
        self.subscribers.lock().unwrap_or_else(|e| e.into_inner()).clear();
        // Wake the blocking accept.
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for StreamServer {
    fn drop(&mut self) {
        if self.acceptor.is_some() {
            self.stop();
        }
    }
}

fn serve(stream: TcpStream, rx: std::sync::mpsc::Receiver<Arc<str>>) {
    let _ = stream.set_nodelay(true);
    let mut w = BufWriter::new(stream);
    while let Ok(line) = rx.recv() {
        if writeln!(w, "{line}").is_err() {
            return;
        }
        // Flush whenever the queue runs dry so clients see records promptly.
        let mut pending = rx.try_recv();
        while let Ok(next) = pending {
            if writeln!(w, "{next}").is_err() {
                return;
            }
            pending = rx.try_recv();
        }
        if w.flush().is_err() {
            return;
        }
    }
    let _ = w.flush();
}

use std::io::Write;
use std::path::Path;
use std::sync::mpsc::{self, Sender};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use super::{LogError, LogRecord};

/// Destination for log records. `flush` is called at least once per
/// simulated second.
pub trait LogSink {
    fn record(&mut self, rec: &LogRecord) -> Result<(), LogError>;
    fn flush(&mut self) -> Result<(), LogError> {
        Ok(())
    }
}

/// Keeps serialized lines in memory.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub lines: Vec<String>,
}

impl LogSink for MemorySink {
    fn record(&mut self, rec: &LogRecord) -> Result<(), LogError> {
        self.lines.push(rec.to_line());
        Ok(())
    }
}

enum Msg {
    Line(String),
    Flush,
}

/// File writer on its own thread. The simulation only pays for
/// serialization and a channel send.
pub struct LogWriter {
    tx: Option<Sender<Msg>>,
    handle: Option<JoinHandle<()>>,
    failure: Arc<Mutex<Option<std::io::Error>>>,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self, LogError> {
        let file = std::fs::File::create(path)?;
        Ok(Self::spawn(Box::new(file)))
    }

    pub fn spawn(out: Box<dyn Write + Send>) -> Self {
        let (tx, rx) = mpsc::channel::<Msg>();
        let failure = Arc::new(Mutex::new(None));
        let fail = Arc::clone(&failure);
        let handle = std::thread::spawn(move || {
            let mut out = std::io::BufWriter::new(out);
            for msg in rx {
                let res = match msg {
                    Msg::Line(line) => out
                        .write_all(line.as_bytes())
                        .and_then(|_| out.write_all(b"\n")),
                    Msg::Flush => out.flush(),
                };
                if let Err(e) = res {
                    // best effort: leave a marker so readers see the cut
                    let _ = out.write_all(b"{\"rec\":\"evt\",\"t\":null,\"step_index\":null,\"type\":\"truncated\",\"detail\":null}\n");
                    let _ = out.flush();
                    *fail.lock().expect("writer lock") = Some(e);
                    return;
                }
            }
            if let Err(e) = out.flush() {
                *fail.lock().expect("writer lock") = Some(e);
            }
        });
        Self {
            tx: Some(tx),
            handle: Some(handle),
            failure,
        }
    }

    fn check(&self) -> Result<(), LogError> {
        match self.failure.lock().expect("writer lock").take() {
            Some(e) => Err(LogError::Io(e)),
            None => Ok(()),
        }
    }

    fn send(&mut self, msg: Msg) -> Result<(), LogError> {
        self.check()?;
        let tx = self.tx.as_ref().expect("writer open");
        if tx.send(msg).is_err() {
            // thread ended early; its error explains why
            self.join();
            self.check()?;
            return Err(LogError::Io(std::io::Error::other("log writer stopped")));
        }
        Ok(())
    }

    fn join(&mut self) {
        self.tx = None;
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }

    /// Drain the queue, flush and close.
    pub fn finish(mut self) -> Result<(), LogError> {
        self.join();
        self.check()
    }
}

impl LogSink for LogWriter {
    fn record(&mut self, rec: &LogRecord) -> Result<(), LogError> {
        self.send(Msg::Line(rec.to_line()))
    }

    fn flush(&mut self) -> Result<(), LogError> {
        self.send(Msg::Flush)
    }
}

impl Drop for LogWriter {
    fn drop(&mut self) {
        self.join();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datalog::{LogEvent, RunLog};

    fn evt(i: u64) -> LogRecord {
        LogRecord::Evt(LogEvent {
            t: i as f64 * 0.02,
            step_index: i,
            kind: "x".into(),
            detail: serde_json::Value::Null,
        })
    }

    #[test]
    fn lines_arrive_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        let mut w = LogWriter::create(&path).unwrap();
        for i in 0..500 {
            w.record(&evt(i)).unwrap();
            if i % 50 == 0 {
                w.flush().unwrap();
            }
        }
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 500);
        assert_eq!(lines[499], evt(499).to_line());
        assert!(RunLog::read(text.as_bytes()).is_err(), "no header");
    }

    struct Failing;
    impl Write for Failing {
        fn write(&mut self, _: &[u8]) -> std::io::Result<usize> {
            Err(std::io::Error::other("disk full"))
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Err(std::io::Error::other("disk full"))
        }
    }

    #[test]
    fn io_failure_surfaces() {
        let mut w = LogWriter::spawn(Box::new(Failing));
        let mut failed = false;
        for i in 0..10_000 {
            if w.record(&evt(i)).and_then(|_| w.flush()).is_err() {
                failed = true;
                break;
            }
        }
        assert!(failed || w.finish().is_err());
    }
}

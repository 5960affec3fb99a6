use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;

use crate::failure::Failure;
use crate::manifest::{RunManifest, FILE_NAME};

/// Where a run's data goes: files in a directory, or stdout.
pub struct Sink {
    dir: Option<PathBuf>,
    written: Vec<String>,
    started: Instant,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, started: Instant) -> Result<Self, Failure> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| Failure::io(d.display(), e))?;
        }
        Ok(Sink {
            dir,
            written: Vec::new(),
            started,
        })
    }

    pub fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                std::fs::write(&path, bytes).map_err(|e| Failure::io(path.display(), e))?;
                self.written.push(name.to_string());
            }
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes).map_err(|e| Failure::io("stdout", e))?;
            }
        }
        Ok(())
    }

    /// Records the outputs and writes `manifest.json` when writing to a directory.
    pub fn finish(self, mut manifest: RunManifest) -> Result<(), Failure> {
        let Some(dir) = self.dir else { return Ok(()) };
        manifest.elapsed_ms = self.started.elapsed().as_millis() as u64;
        manifest.outputs = self.written;
        let path = dir.join(FILE_NAME);
        std::fs::write(&path, json_bytes(&manifest)?).map_err(|e| Failure::io(path.display(), e))
    }
}

pub fn json_bytes(value: &impl Serialize) -> Result<Vec<u8>, Failure> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Shortest decimal that parses back to `x`, switching to exponent form for
/// very small or large magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// CSV with a header row and LF line endings.
pub fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, Failure> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(|e| Failure::io("csv", e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| Failure::io("csv", e))?;
    }
    w.into_inner().map_err(|e| Failure::io("csv", e))
}

/// Runs `f` over `items` on up to `jobs` threads, keeping input order.
pub fn run_jobs<T: Sync, R: Send>(items: &[T], jobs: u16, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let jobs = (jobs as usize).clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<R>> = (0..items.len()).map(|_| None).collect();
    let results = std::sync::Mutex::new(&mut slots);
    std::thread::scope(|s| {
        for _ in 0..jobs {
            s.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if k >= items.len() {
                    break;
                }
                let r = f(&items[k]);
                results.lock().expect("worker panicked")[k] = Some(r);
            });
        }
    });
    slots.into_iter().map(|r| r.expect("every job ran")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jobs_keep_order() {
        let items: Vec<u64> = (0..50).collect();
        assert_eq!(run_jobs(&items, 4, |x| x * x), run_jobs(&items, 1, |x| x * x));
    }

    #[test]
    fn csv_floats_round_trip() {
        let xs = [0.1, 1.0 / 3.0, 2.927_050_983_124_842_5, -1e-300, 1.7e-12, 3.0];
        let bytes = csv_bytes(&["x"], xs.iter().map(|&x| vec![num(x)])).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let back: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        assert_eq!(back, xs);
    }
}

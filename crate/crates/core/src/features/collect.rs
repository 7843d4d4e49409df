use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use super::cache::ReportCache;
use super::engines::EngineClient;
use super::EngineReport;
use crate::net::Clock;

/// Spaces out network fetches by at least `min_interval`, across threads.
#[derive(Debug)]
pub struct RateLimiter {
    min_interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration) -> Self {
        Self {
            min_interval,
            next: Mutex::new(None),
        }
    }

    pub fn acquire(&self) {
        let wait = {
            let mut next = self.next.lock().expect("rate limiter lock");
            let now = Instant::now();
            let slot = next.map_or(now, |n| n.max(now));
            *next = Some(slot + self.min_interval);
            slot.saturating_duration_since(now)
        };
        if !wait.is_zero() {
            std::thread::sleep(wait);
        }
    }
}

#[derive(Debug, Clone)]
pub struct CollectOptions {
    /// Remote engines are served from the cache only.
    pub offline: bool,
    pub timeout: Duration,
    pub rate_limiter: Option<Arc<RateLimiter>>,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self {
            offline: false,
            timeout: Duration::from_secs(20),
            rate_limiter: None,
        }
    }
}

fn fetch_with_timeout(
    client: &Arc<dyn EngineClient>,
    domain: &str,
    timeout: Duration,
) -> Result<std::collections::BTreeMap<String, super::SignalValue>, String> {
    let (tx, rx) = mpsc::channel();
    let c = Arc::clone(client);
    let d = domain.to_string();
    std::thread::spawn(move || {
        let _ = tx.send(c.fetch(&d));
    });
    match rx.recv_timeout(timeout) {
        Ok(Ok(signals)) => Ok(signals),
        Ok(Err(e)) => Err(e.to_string()),
        Err(mpsc::RecvTimeoutError::Timeout) => Err(format!("timed out after {timeout:?}")),
        Err(mpsc::RecvTimeoutError::Disconnected) => Err("engine worker panicked".into()),
    }
}

/// One report per client, sorted by engine id. Fresh cache entries are used
/// first; remote engines are fetched concurrently, each under the timeout.
/// Any failure becomes an all-missing report and is not cached.
pub fn collect_reports(
    domain: &str,
    clients: &[Arc<dyn EngineClient>],
    cache: Option<&ReportCache>,
    clock: &dyn Clock,
    opts: &CollectOptions,
) -> Vec<EngineReport> {
    let now = clock.now();
    let mut reports = Vec::with_capacity(clients.len());
    let mut pending = Vec::new();
    for client in clients {
        let cached = if client.is_local() {
            None
        } else {
            cache.and_then(|c| c.get(client.id(), domain, now))
        };
        match cached {
            Some(r) => reports.push(r),
            None if opts.offline && !client.is_local() => reports.push(EngineReport::missing(
                client.id(),
                domain,
                &client.signals(),
                now,
                "offline and not cached".into(),
            )),
            None => pending.push(Arc::clone(client)),
        }
    }

    let fetched: Vec<EngineReport> = std::thread::scope(|s| {
        let handles: Vec<_> = pending
            .iter()
            .map(|client| {
                s.spawn(move || {
                    if !client.is_local() {
                        if let Some(rl) = &opts.rate_limiter {
                            rl.acquire();
                        }
                    }
                    let result = fetch_with_timeout(client, domain, opts.timeout);
                    (client, result)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                let (client, result) = h.join().expect("collector thread");
                match result {
                    Ok(mut signals) => {
                        for name in client.signals() {
                            signals.entry(name).or_default();
                        }
                        let report = EngineReport {
                            engine_id: client.id().to_string(),
                            domain: domain.to_string(),
                            signals,
                            retrieved_at: now,
                            failure: None,
                        };
                        if !client.is_local() {
                            if let Some(c) = cache {
                                if let Err(e) = c.put(&report) {
                                    log::warn!("cannot write cache: {e}");
                                }
                            }
                        }
                        report
                    }
                    Err(why) => {
                        log::warn!("engine {} failed for {domain}: {why}", client.id());
                        EngineReport::missing(client.id(), domain, &client.signals(), now, why)
                    }
                }
            })
            .collect()
    });
    reports.extend(fetched);
    reports.sort_by(|a, b| a.engine_id.cmp(&b.engine_id));
    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::engines::EngineError;
    use crate::features::SignalValue;
    use crate::net::FixedClock;
    use chrono::DateTime;
    use std::collections::BTreeMap;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Stub {
        id: &'static str,
        calls: AtomicUsize,
        behavior: fn() -> Result<BTreeMap<String, SignalValue>, EngineError>,
        delay: Duration,
    }

    impl EngineClient for Stub {
        fn id(&self) -> &str {
            self.id
        }
        fn signals(&self) -> Vec<String> {
            vec![format!("{}.score", self.id)]
        }
        fn fetch(&self, _domain: &str) -> Result<BTreeMap<String, SignalValue>, EngineError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            std::thread::sleep(self.delay);
            (self.behavior)()
        }
    }

    fn ok() -> Result<BTreeMap<String, SignalValue>, EngineError> {
        Ok(BTreeMap::new())
    }

    fn fail() -> Result<BTreeMap<String, SignalValue>, EngineError> {
        Err(EngineError::Unavailable("boom".into()))
    }

    fn stub(id: &'static str, behavior: fn() -> Result<BTreeMap<String, SignalValue>, EngineError>) -> Arc<Stub> {
        Arc::new(Stub {
            id,
            calls: AtomicUsize::new(0),
            behavior,
            delay: Duration::ZERO,
        })
    }

    fn clock() -> FixedClock {
        FixedClock(DateTime::UNIX_EPOCH)
    }

    #[test]
    fn one_failing_engine_yields_missing_report() {
        let clients: Vec<Arc<dyn EngineClient>> = vec![stub("c", ok), stub("a", fail), stub("b", ok)];
        let reports = collect_reports("x.com", &clients, None, &clock(), &CollectOptions::default());
        let ids: Vec<_> = reports.iter().map(|r| r.engine_id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
        assert!(reports[0].all_missing());
        assert!(reports[0].failure.is_some());
        assert_eq!(reports[1].signals.len(), 1);
    }

    #[test]
    fn timeouts_become_missing() {
        let slow: Arc<dyn EngineClient> = Arc::new(Stub {
            id: "slow",
            calls: AtomicUsize::new(0),
            behavior: ok,
            delay: Duration::from_millis(500),
        });
        let opts = CollectOptions {
            timeout: Duration::from_millis(20),
            ..Default::default()
        };
        let reports = collect_reports("x.com", &[slow], None, &clock(), &opts);
        assert!(reports[0].all_missing());
        assert!(reports[0].failure.as_deref().unwrap().contains("timed out"));
    }

    #[test]
    fn warm_cache_means_no_fetches() {
        let cache = ReportCache::in_memory(chrono::Duration::days(30));
        let a = stub("a", ok);
        let b = stub("b", fail);
        let clients: Vec<Arc<dyn EngineClient>> = vec![a.clone(), b.clone()];
        collect_reports("x.com", &clients, Some(&cache), &clock(), &CollectOptions::default());
        assert_eq!(cache.len(), 1);
        let before = (a.calls.load(Ordering::SeqCst), b.calls.load(Ordering::SeqCst));
        let offline = CollectOptions {
            offline: true,
            ..Default::default()
        };
        let reports = collect_reports("x.com", &clients, Some(&cache), &clock(), &offline);
        assert_eq!((a.calls.load(Ordering::SeqCst), b.calls.load(Ordering::SeqCst)), before);
        assert!(reports[0].failure.is_none());
        assert!(reports[1].all_missing());
        let again = collect_reports("x.com", &clients[..1], Some(&cache), &clock(), &CollectOptions::default());
        assert_eq!(a.calls.load(Ordering::SeqCst), before.0);
        assert_eq!(again.len(), 1);
    }

    #[test]
    fn rate_limiter_spaces_calls() {
        let rl = RateLimiter::new(Duration::from_millis(30));
        let start = Instant::now();
        for _ in 0..3 {
            rl.acquire();
        }
        assert!(start.elapsed() >= Duration::from_millis(60));
    }
}

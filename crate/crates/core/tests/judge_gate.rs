use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use agentguard_core::judge::{HttpJudge, HttpReply, HttpTransport, JudgeClient, JudgeEndpoint, JudgeRequest, RetryPolicy};

/// Records the peak number of concurrent posts.
#[derive(Default)]
struct Slow {
    now: AtomicUsize,
    peak: AtomicUsize,
    total: AtomicUsize,
}

impl HttpTransport for Slow {
    fn post_json(&self, _: &str, _: &[(String, String)], _: &str) -> Result<HttpReply, String> {
        let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
        self.peak.fetch_max(n, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(15));
        self.now.fetch_sub(1, Ordering::SeqCst);
        self.total.fetch_add(1, Ordering::SeqCst);
        Ok(HttpReply {
            status: 200,
            body: r#"{"choices":[{"message":{"content":"PASS"}}]}"#.into(),
        })
    }
}

fn endpoint() -> JudgeEndpoint {
    JudgeEndpoint {
        base_url: "http://judge.invalid".into(),
        model: "m".into(),
        api_key: None,
    }
}

#[test]
fn in_flight_requests_never_exceed_cap() {
    for cap in [1, 3, 8] {
        let transport = Arc::new(Slow::default());
        let judge = HttpJudge::with_transport(endpoint(), transport.clone(), RetryPolicy::default(), cap);
        std::thread::scope(|s| {
            for i in 0..24 {
                let judge = &judge;
                s.spawn(move || {
                    let r = judge.complete(&JudgeRequest::bounded("sys", &format!("q{i}"), 8, 1024)).unwrap();
                    assert_eq!(r.text, "PASS");
                });
            }
        });
        assert_eq!(transport.total.load(Ordering::SeqCst), 24);
        let peak = transport.peak.load(Ordering::SeqCst);
        assert!(peak <= cap, "cap {cap}, peak {peak}");
        if cap > 1 {
            assert!(peak > 1, "cap {cap} never overlapped");
        }
    }
}

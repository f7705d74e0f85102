//! Running external tools under wall-clock and memory limits.

use std::io::{Read, Write};
use std::os::unix::process::CommandExt;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    Exited(i32),
    Signaled,
    Timeout,
    Memout,
}

#[derive(Clone, Debug)]
pub struct ProcessOutput {
    pub termination: Termination,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub wall_time: Duration,
    /// Highest resident set size seen while polling, in bytes.
    pub peak_rss: u64,
}

fn rss_bytes(pid: u32) -> Option<u64> {
    let status = std::fs::read_to_string(format!("/proc/{pid}/status")).ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}

/// Runs `argv` in its own process group, feeding `input` on stdin. The whole
/// group is killed when `time` elapses or the leader's RSS exceeds `memory`.
pub fn run_limited(argv: &[String], input: &[u8], time: Option<Duration>, memory: Option<u64>) -> std::io::Result<ProcessOutput> {
    let (prog, args) = argv.split_first().ok_or_else(|| std::io::Error::other("empty command"))?;
    let started = Instant::now();
    let mut child = Command::new(prog)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .process_group(0)
        .spawn()?;
    let pid = child.id();
    let mut stdin = child.stdin.take().expect("piped");
    let input = input.to_vec();
    let writer = thread::spawn(move || {
        // the tool may exit without reading everything
        let _ = stdin.write_all(&input);
    });
    let mut out = child.stdout.take().expect("piped");
    let mut err = child.stderr.take().expect("piped");
    let out_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = out.read_to_end(&mut buf);
        buf
    });
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = err.read_to_end(&mut buf);
        buf
    });

    let mut peak = 0;
    let mut killed = None;
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break s;
        }
        if let Some(rss) = rss_bytes(pid) {
            peak = peak.max(rss);
        }
        if killed.is_none() {
            if time.is_some_and(|t| started.elapsed() >= t) {
                killed = Some(Termination::Timeout);
            } else if memory.is_some_and(|m| peak > m) {
                killed = Some(Termination::Memout);
            }
            if killed.is_some() {
                // SAFETY: plain syscall on the child's process group
                unsafe {
                    libc::kill(-(pid as i32), libc::SIGKILL);
                }
            }
        }
        thread::sleep(Duration::from_millis(5));
    };
    let wall_time = started.elapsed();
    let _ = writer.join();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    let termination = killed.unwrap_or(match status.code() {
        Some(c) => Termination::Exited(c),
        None => Termination::Signaled,
    });
    Ok(ProcessOutput { termination, stdout, stderr, wall_time, peak_rss: peak })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sh(script: &str) -> Vec<String> {
        vec!["sh".into(), "-c".into(), script.into()]
    }

    #[test]
    fn echoes_and_exit_codes() {
        let o = run_limited(&sh("cat; exit 10"), b"hello", None, None).unwrap();
        assert_eq!(o.termination, Termination::Exited(10));
        assert_eq!(o.stdout, b"hello");
    }

    #[test]
    fn timeout_kills_the_group() {
        let o = run_limited(&sh("sleep 5 & sleep 5; wait"), b"", Some(Duration::from_millis(100)), None).unwrap();
        assert_eq!(o.termination, Termination::Timeout);
        assert!(o.wall_time < Duration::from_secs(3));
    }

    #[test]
    fn missing_program_is_an_error() {
        assert!(run_limited(&["/nonexistent/tool".to_string()], b"", None, None).is_err());
    }
}

use std::io::{BufReader, ErrorKind};
use std::net::{IpAddr, SocketAddr, TcpListener, TcpStream, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use super::echo::{EchoPacket, ECHO_PACKET_LEN};
use super::throughput::{drain, read_control_line, stream_blocks, write_json_line, Ack, ControlHeader, Direction};
use super::ProbeError;

const POLL: Duration = Duration::from_millis(20);

/// A running measurement server. Dropping the handle does not stop it;
/// call [`ServerHandle::shutdown`].
pub struct ServerHandle {
    pub rtt_addr: SocketAddr,
    pub tp_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        self.stop.clone()
    }

    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        self.wait();
    }

    /// Blocks until the stop flag is raised and both responders exit.
    pub fn wait(self) {
        for t in self.threads {
            let _ = t.join();
        }
    }
}

/// Starts the echo responder and the throughput responder. Port 0 picks
/// an ephemeral port; the bound addresses are on the handle.
pub fn run_server(bind: IpAddr, rtt_port: u16, tp_port: u16) -> Result<ServerHandle, ProbeError> {
    let udp = UdpSocket::bind((bind, rtt_port))
        .map_err(|source| ProbeError::Bind { addr: format!("udp {bind}:{rtt_port}"), source })?;
    let tcp = TcpListener::bind((bind, tp_port))
        .map_err(|source| ProbeError::Bind { addr: format!("tcp {bind}:{tp_port}"), source })?;
    let rtt_addr = udp.local_addr()?;
    let tp_addr = tcp.local_addr()?;
    udp.set_read_timeout(Some(POLL))?;
    tcp.set_nonblocking(true)?;

    let stop = Arc::new(AtomicBool::new(false));
    let echo_stop = stop.clone();
    let echo = std::thread::Builder::new().name("echo".into()).spawn(move || echo_loop(udp, &echo_stop))?;
    let tp_stop = stop.clone();
    let tp = std::thread::Builder::new().name("throughput".into()).spawn(move || accept_loop(tcp, &tp_stop))?;
    log::info!("echo responder on {rtt_addr}, throughput responder on {tp_addr}");
    Ok(ServerHandle { rtt_addr, tp_addr, stop, threads: vec![echo, tp] })
}

fn echo_loop(sock: UdpSocket, stop: &AtomicBool) {
    let mut buf = [0u8; 2048];
    while !stop.load(Ordering::SeqCst) {
        match sock.recv_from(&mut buf) {
            Ok((n, peer)) => {
                if n != ECHO_PACKET_LEN || EchoPacket::decode(&buf[..n]).is_none() {
                    log::debug!("dropped {n}-byte datagram from {peer}");
                    continue;
                }
                if let Err(e) = sock.send_to(&buf[..n], peer) {
                    log::debug!("echo to {peer} failed: {e}");
                }
            }
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut | ErrorKind::Interrupted) => {}
            Err(e) => log::warn!("echo socket: {e}"),
        }
    }
}

fn accept_loop(listener: TcpListener, stop: &AtomicBool) {
    let mut sessions: Vec<JoinHandle<()>> = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let spawned = std::thread::Builder::new().name(format!("tp-{peer}")).spawn(move || {
                    if let Err(e) = handle_session(stream) {
                        log::warn!("throughput session {peer}: {e}");
                    }
                });
                match spawned {
                    Ok(h) => sessions.push(h),
                    Err(e) => log::warn!("cannot spawn session for {peer}: {e}"),
                }
                sessions.retain(|h| !h.is_finished());
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => std::thread::sleep(POLL),
            Err(e) => {
                log::warn!("accept: {e}");
                std::thread::sleep(POLL);
            }
        }
    }
    for h in sessions {
        let _ = h.join();
    }
}

fn handle_session(stream: TcpStream) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    let line = read_control_line(&mut reader)?;
    let header = match serde_json::from_str::<ControlHeader>(line.trim_end()) {
        Ok(h) => match h.validate() {
            Ok(()) => h,
            Err(e) => return write_json_line(&mut writer, &Ack::Error { error: e }),
        },
        Err(e) => return write_json_line(&mut writer, &Ack::Error { error: format!("bad control header: {e}") }),
    };
    write_json_line(&mut writer, &Ack::Ok { ok: true })?;

    let duration = Duration::from_secs(u64::from(header.duration_s));
    match header.dir {
        Direction::Ul => {
            reader.get_ref().set_read_timeout(Some(duration + Duration::from_secs(10)))?;
            let received = drain(&mut reader)?;
            write_json_line(&mut writer, &received)
        }
        Direction::Dl => {
            let sent = stream_blocks(&mut writer, duration, header.block_bytes, header.rate_mbps)
                .map_err(|(_, e)| e)?;
            write_json_line(&mut writer, &sent)?;
            writer.shutdown(std::net::Shutdown::Write)
        }
    }
}

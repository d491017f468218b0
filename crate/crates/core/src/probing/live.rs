//! Raw-socket transport for probing real networks.
//!
//! Sends fully formed IPv4 packets through an `IPPROTO_RAW` socket and
//! listens for ICMP on a second raw socket, so the engine sees live
//! answers in exactly the shape the simulator produces. Requires
//! CAP_NET_RAW (or root) at runtime; `open` reports that as an error
//! instead of panicking.

use std::io;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4, UdpSocket};
use std::os::unix::io::RawFd;
use std::time::{Duration, Instant};

use super::{Transport, TransportError};

/// Receive buffer size: 20 bytes of outer IP header, 8 of ICMP, and
/// the quoted probe, with slack for options. Longer datagrams are
/// truncated, which the response parser tolerates.
const RECV_BUF: usize = 512;

/// A [`Transport`] backed by raw sockets on the host network stack.
///
/// The clock is monotonic microseconds since `open`, matching the
/// engine's expectation that timestamps only ever move forward.
pub struct LiveTransport {
    send_fd: RawFd,
    recv_fd: RawFd,
    local: Ipv4Addr,
    started: Instant,
}

impl LiveTransport {
    /// Open raw sockets toward `dest` and learn which local address
    /// the kernel would route it from.
    pub fn open(dest: Ipv4Addr) -> Result<Self, TransportError> {
        // Routing-table lookup without sending a byte: connect a UDP
        // socket and read back the chosen source address.
        let probe = UdpSocket::bind("0.0.0.0:0")?;
        probe.connect(SocketAddrV4::new(dest, 33434))?;
        let local = match probe.local_addr()? {
            SocketAddr::V4(a) => *a.ip(),
            other => {
                return Err(TransportError::Other(format!("unexpected local address {other}")))
            }
        };

        let send_fd = raw_socket(libc::IPPROTO_RAW)?;
        let recv_fd = match raw_socket(libc::IPPROTO_ICMP) {
            Ok(fd) => fd,
            Err(e) => {
                unsafe { libc::close(send_fd) };
                return Err(e);
            }
        };
        // IPPROTO_RAW implies header-included on Linux; set it anyway
        // so the intent survives porting.
        let one: libc::c_int = 1;
        let rc = unsafe {
            libc::setsockopt(
                send_fd,
                libc::IPPROTO_IP,
                libc::IP_HDRINCL,
                &one as *const libc::c_int as *const libc::c_void,
                std::mem::size_of::<libc::c_int>() as libc::socklen_t,
            )
        };
        if rc != 0 {
            let err = io::Error::last_os_error();
            unsafe {
                libc::close(send_fd);
                libc::close(recv_fd);
            }
            return Err(TransportError::Io(err));
        }

        Ok(Self { send_fd, recv_fd, local, started: Instant::now() })
    }

    /// The source address probes from this transport should carry.
    pub fn local_addr(&self) -> Ipv4Addr {
        self.local
    }
}

fn raw_socket(protocol: libc::c_int) -> Result<RawFd, TransportError> {
    let fd = unsafe { libc::socket(libc::AF_INET, libc::SOCK_RAW, protocol) };
    if fd < 0 {
        let err = io::Error::last_os_error();
        return Err(if err.kind() == io::ErrorKind::PermissionDenied {
            TransportError::Other("raw sockets need CAP_NET_RAW or root".into())
        } else {
            TransportError::Io(err)
        });
    }
    Ok(fd)
}

impl Transport for LiveTransport {
    fn send(&mut self, octets: &[u8]) -> Result<u64, TransportError> {
        if octets.len() < 20 {
            return Err(TransportError::Other("packet shorter than an IPv4 header".into()));
        }
        let dest = Ipv4Addr::new(octets[16], octets[17], octets[18], octets[19]);
        let addr = libc::sockaddr_in {
            sin_family: libc::AF_INET as libc::sa_family_t,
            sin_port: 0,
            sin_addr: libc::in_addr { s_addr: u32::from(dest).to_be() },
            sin_zero: [0; 8],
        };
        let sent = unsafe {
            libc::sendto(
                self.send_fd,
                octets.as_ptr() as *const libc::c_void,
                octets.len(),
                0,
                &addr as *const libc::sockaddr_in as *const libc::sockaddr,
                std::mem::size_of::<libc::sockaddr_in>() as libc::socklen_t,
            )
        };
        if sent < 0 {
            return Err(TransportError::Io(io::Error::last_os_error()));
        }
        Ok(self.now_us())
    }

    fn recv(&mut self, deadline_us: u64) -> Result<Option<(Vec<u8>, u64)>, TransportError> {
        loop {
            let now = self.now_us();
            if now >= deadline_us {
                return Ok(None);
            }
            let wait_ms = (deadline_us - now).div_ceil(1000).min(i32::MAX as u64) as i32;
            let mut fds = libc::pollfd { fd: self.recv_fd, events: libc::POLLIN, revents: 0 };
            let ready = unsafe { libc::poll(&mut fds, 1, wait_ms) };
            if ready < 0 {
                let err = io::Error::last_os_error();
                if err.kind() == io::ErrorKind::Interrupted {
                    continue;
                }
                return Err(TransportError::Io(err));
            }
            if ready == 0 {
                return Ok(None);
            }
            let mut buf = [0u8; RECV_BUF];
            let n = unsafe {
                libc::recv(self.recv_fd, buf.as_mut_ptr() as *mut libc::c_void, buf.len(), 0)
            };
            if n < 0 {
                let err = io::Error::last_os_error();
                match err.kind() {
                    io::ErrorKind::Interrupted | io::ErrorKind::WouldBlock => continue,
                    _ => return Err(TransportError::Io(err)),
                }
            }
            return Ok(Some((buf[..n as usize].to_vec(), self.now_us())));
        }
    }

    fn now_us(&self) -> u64 {
        self.started.elapsed().as_micros() as u64
    }

    fn sleep_us(&mut self, us: u64) {
        std::thread::sleep(Duration::from_micros(us));
    }
}

impl Drop for LiveTransport {
    fn drop(&mut self) {
        unsafe {
            libc::close(self.send_fd);
            libc::close(self.recv_fd);
        }
    }
}

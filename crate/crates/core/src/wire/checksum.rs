//! One's-complement internet checksum.
//!
//! Every checksum on an IPv4 datagram (IP header, ICMP, UDP, TCP) is the
//! one's complement of a one's-complement sum of big-endian 16-bit words.
//! An odd trailing octet is padded on the right with a zero. The sum is
//! what load balancers and response matching care about, so the helpers
//! here expose the partial sum and the 16-bit fold separately: header
//! fields can be solved for (make this checksum land on that value) with
//! one's-complement arithmetic on folded sums.

/// Accumulate a buffer into a 32-bit partial sum of 16-bit words.
pub fn checksum_partial(mut sum: u32, data: &[u8]) -> u32 {
    let mut i = 0;
    while i + 1 < data.len() {
        sum += ((data[i] as u32) << 8) | data[i + 1] as u32;
        i += 2;
    }
    if i < data.len() {
        sum += (data[i] as u32) << 8;
    }
    sum
}

/// Fold the carries of a partial sum back in until 16 bits remain.
pub fn checksum_fold(mut sum: u32) -> u16 {
    while sum >> 16 != 0 {
        sum = (sum & 0xFFFF) + (sum >> 16);
    }
    sum as u16
}

/// Checksum of a complete buffer. Empty input sums to zero and so
/// yields 0xFFFF.
pub fn internet_checksum(data: &[u8]) -> u16 {
    !checksum_fold(checksum_partial(0, data))
}

/// True when a buffer that embeds its own checksum field sums, pre
/// complement, to 0xFFFF (equivalently: its checksum computes to zero).
pub fn checksum_verifies(data: &[u8]) -> bool {
    checksum_fold(checksum_partial(0, data)) == 0xFFFF
}

/// One's-complement 16-bit addition.
pub fn ones_add(a: u16, b: u16) -> u16 {
    checksum_fold(a as u32 + b as u32)
}

/// One's-complement 16-bit subtraction: a value x with b + x = a in
/// one's-complement arithmetic. Used to solve a free header field so
/// that a checksum lands on a chosen constant.
pub fn ones_sub(a: u16, b: u16) -> u16 {
    ones_add(a, !b)
}

//! CSV writers for particle snapshots and the adhesion network.
//!
//! Floats use Rust's shortest round-trip formatting, so identical runs give
//! byte-identical files.

use std::io::{self, Write};

use crate::geometry::ParticleState;
use crate::multibody::{ContactRecord, Frame};

pub const SNAPSHOT_HEADER: &str = "step,t,id,x,y,z,vx,vy,vz,r";
pub const NETWORK_HEADER: &str = "step,t,i,j,gamma,D";

pub fn write_snapshot_rows<W: Write>(w: &mut W, step: usize, t: f64, state: &ParticleState) -> io::Result<()> {
    for (id, (x, v)) in state.positions.iter().zip(&state.velocities).enumerate() {
        writeln!(
            w,
            "{step},{t},{id},{},{},{},{},{},{},{}",
            x.x, x.y, x.z, v.x, v.y, v.z, state.radii[id]
        )?;
    }
    Ok(())
}

/// Obstacle contacts appear with `j = N + obstacle index`.
pub fn write_network_rows<W: Write>(w: &mut W, step: usize, t: f64, network: &[ContactRecord]) -> io::Result<()> {
    for c in network {
        writeln!(w, "{step},{t},{},{},{},{}", c.i, c.j, c.gamma, c.distance)?;
    }
    Ok(())
}

/// Streams frames into a snapshot file and a network file.
pub struct FrameWriter<S: Write, N: Write> {
    snapshots: S,
    network: N,
}

impl<S: Write, N: Write> FrameWriter<S, N> {
    /// Writes both headers immediately.
    pub fn new(mut snapshots: S, mut network: N) -> io::Result<Self> {
        writeln!(snapshots, "{SNAPSHOT_HEADER}")?;
        writeln!(network, "{NETWORK_HEADER}")?;
        Ok(FrameWriter { snapshots, network })
    }

    pub fn write_frame(&mut self, frame: &Frame<'_>) -> io::Result<()> {
        write_snapshot_rows(&mut self.snapshots, frame.step, frame.t, frame.state)?;
        write_network_rows(&mut self.network, frame.step, frame.t, frame.network)
    }

    pub fn finish(mut self) -> io::Result<(S, N)> {
        self.snapshots.flush()?;
        self.network.flush()?;
        Ok((self.snapshots, self.network))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::projection::ContactKey;

    #[test]
    fn rows_and_headers() {
        let mut s = ParticleState::empty(false);
        s.push(Vec3::new(0.5, 1.0, 0.0), Vec3::new(0.0, -1.0, 0.0), 0.1, 1.0, 0.0);
        let net = vec![ContactRecord {
            key: ContactKey::Obstacle {
                particle: 0,
                obstacle: 2,
                member: 0,
            },
            i: 0,
            j: 3,
            gamma: -0.25,
            distance: 0.0,
        }];
        let mut w = FrameWriter::new(Vec::new(), Vec::new()).unwrap();
        w.write_frame(&Frame {
            step: 4,
            t: 0.004,
            state: &s,
            network: &net,
        })
        .unwrap();
        let (a, b) = w.finish().unwrap();
        assert_eq!(
            String::from_utf8(a).unwrap(),
            "step,t,id,x,y,z,vx,vy,vz,r\n4,0.004,0,0.5,1,0,0,-1,0,0.1\n"
        );
        assert_eq!(String::from_utf8(b).unwrap(), "step,t,i,j,gamma,D\n4,0.004,0,3,-0.25,0\n");
    }
}

//! JSON trace and environment files.
//!
//! A trace is a header (bounds, timestep, object table) followed by one record per frame and a
//! terminal state. An environment file carries the same header and a single state.

use super::{Action, AgentState, Config, Held, ObjId, Pose, Scene, Shape, Trajectory, WorldState};
use crate::world::Color;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjId,
    pub shape: Shape,
    pub color: Color,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    /// `[x_min, y_min, x_max, y_max]`; always the unit square.
    pub bounds: [f64; 4],
    pub dt: f64,
    pub config: Config,
    pub objects: Vec<ObjectSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub x: f64,
    pub y: f64,
    pub grip: u8,
    pub held: Option<ObjId>,
    /// Object position minus agent position while held.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasp: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: ObjId,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub x: f64,
    pub y: f64,
    pub grip: u8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub t: f64,
    pub agent: AgentRecord,
    pub objects: Vec<ObjectRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: f64,
    pub agent: AgentRecord,
    pub objects: Vec<ObjectRecord>,
    pub action: ActionRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    #[serde(flatten)]
    pub header: Header,
    pub frames: Vec<FrameRecord>,
    pub terminal: StateRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvFile {
    #[serde(flatten)]
    pub header: Header,
    pub state: StateRecord,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("frame {frame}: {message}")]
    Frame { frame: usize, message: String },
    #[error("trace has no frames")]
    Empty,
    #[error("bad header: {0}")]
    Header(String),
}

pub fn header_of(scene: &Scene) -> Header {
    Header {
        bounds: [0.0, 0.0, 1.0, 1.0],
        dt: scene.config.dt,
        config: scene.config.clone(),
        objects: scene
            .bodies
            .iter()
            .map(|b| ObjectSpec {
                id: b.id,
                shape: b.shape,
                color: b.color,
            })
            .collect(),
    }
}

pub fn scene_of(header: &Header) -> Result<Arc<Scene>, TraceError> {
    if header.bounds != [0.0, 0.0, 1.0, 1.0] {
        return Err(TraceError::Header("bounds must be the unit square".into()));
    }
    for (i, o) in header.objects.iter().enumerate() {
        if !o.shape.is_valid() {
            return Err(TraceError::Header(format!(
                "object {} has an invalid shape",
                o.id
            )));
        }
        if header.objects[..i].iter().any(|p| p.id == o.id) {
            return Err(TraceError::Header(format!("duplicate object id {}", o.id)));
        }
    }
    Ok(Arc::new(Scene::new(
        header.config.clone(),
        header
            .objects
            .iter()
            .map(|o| (o.id, o.shape, o.color))
            .collect(),
    )))
}

fn agent_record(w: &WorldState) -> AgentRecord {
    AgentRecord {
        x: w.agent.x,
        y: w.agent.y,
        grip: w.agent.grip as u8,
        held: w.agent.held.map(|h| w.scene.bodies[h.index].id),
        grasp: w.agent.held.map(|h| [h.dx, h.dy]),
    }
}

fn object_records(w: &WorldState) -> Vec<ObjectRecord> {
    w.scene
        .bodies
        .iter()
        .zip(&w.poses)
        .map(|(b, p)| ObjectRecord {
            id: b.id,
            x: p.x,
            y: p.y,
            theta: p.theta,
        })
        .collect()
}

pub fn state_record(w: &WorldState, t: f64) -> StateRecord {
    StateRecord {
        t,
        agent: agent_record(w),
        objects: object_records(w),
    }
}

fn state_from(
    scene: &Arc<Scene>,
    agent: &AgentRecord,
    objects: &[ObjectRecord],
) -> Result<WorldState, String> {
    if objects.len() != scene.bodies.len() {
        return Err(format!(
            "expected {} objects, found {}",
            scene.bodies.len(),
            objects.len()
        ));
    }
    let mut poses = Vec::with_capacity(objects.len());
    for (b, o) in scene.bodies.iter().zip(objects) {
        if b.id != o.id {
            return Err(format!(
                "object order mismatch: expected id {}, found {}",
                b.id, o.id
            ));
        }
        poses.push(Pose::new(o.x, o.y, o.theta));
    }
    let held = match (agent.held, agent.grasp) {
        (None, _) => None,
        (Some(id), Some([dx, dy])) => Some(Held {
            index: scene
                .index_of(id)
                .ok_or_else(|| format!("held id {id} unknown"))?,
            dx,
            dy,
        }),
        (Some(id), None) => {
            let index = scene
                .index_of(id)
                .ok_or_else(|| format!("held id {id} unknown"))?;
            Some(Held {
                index,
                dx: poses[index].x - agent.x,
                dy: poses[index].y - agent.y,
            })
        }
    };
    if agent.grip > 1 {
        return Err("grip must be 0 or 1".into());
    }
    Ok(WorldState {
        scene: Arc::clone(scene),
        poses,
        agent: AgentState {
            x: agent.x,
            y: agent.y,
            grip: agent.grip == 1,
            held,
        },
    })
}

impl TraceFile {
    pub fn from_trajectory(tau: &Trajectory) -> TraceFile {
        let scene = &tau.initial().scene;
        let dt = scene.config.dt;
        let frames = tau
            .actions
            .iter()
            .enumerate()
            .map(|(t, a)| {
                let w = &tau.states[t];
                FrameRecord {
                    t: t as f64 * dt,
                    agent: agent_record(w),
                    objects: object_records(w),
                    action: ActionRecord {
                        x: a.x,
                        y: a.y,
                        grip: a.grip as u8,
                    },
                }
            })
            .collect();
        TraceFile {
            header: header_of(scene),
            frames,
            terminal: state_record(tau.terminal(), tau.actions.len() as f64 * dt),
        }
    }

    /// Rebuild the trajectory exactly as recorded. Does not re-simulate.
    pub fn to_trajectory(&self) -> Result<Trajectory, TraceError> {
        let scene = scene_of(&self.header)?;
        let mut states = Vec::with_capacity(self.frames.len() + 1);
        let mut actions = Vec::with_capacity(self.frames.len());
        for (i, f) in self.frames.iter().enumerate() {
            let w = state_from(&scene, &f.agent, &f.objects)
                .map_err(|message| TraceError::Frame { frame: i, message })?;
            if f.action.grip > 1 {
                return Err(TraceError::Frame {
                    frame: i,
                    message: "action grip must be 0 or 1".into(),
                });
            }
            states.push(w);
            actions.push(Action::new(f.action.x, f.action.y, f.action.grip == 1));
        }
        let n = self.frames.len();
        let terminal = state_from(&scene, &self.terminal.agent, &self.terminal.objects)
            .map_err(|message| TraceError::Frame { frame: n, message })?;
        states.push(terminal);
        Ok(Trajectory { states, actions })
    }

    pub fn parse(text: &str) -> Result<TraceFile, TraceError> {
        Ok(serde_json::from_str(text)?)
    }
}

impl EnvFile {
    pub fn from_world(w: &WorldState) -> EnvFile {
        EnvFile {
            header: header_of(&w.scene),
            state: state_record(w, 0.0),
        }
    }

    pub fn to_world(&self) -> Result<WorldState, TraceError> {
        let scene = scene_of(&self.header)?;
        state_from(&scene, &self.state.agent, &self.state.objects)
            .map_err(|message| TraceError::Frame { frame: 0, message })
    }
}

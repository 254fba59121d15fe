//! A small five-layer driving stack with an injection hook after every producing stage.

pub mod control;
pub mod perception;
pub mod planning;
pub mod registry;
pub mod sensors;

use control::{ActuationCommand, ControlConfig, PidChannel};
use perception::{Cipo, PerceptionConfig, WorldModel};
use planning::{LaneEstimate, PlannerConfig};
use registry::{var, LaneType, ObjectClass, Stage, Vars};
use sensors::{SensorConfig, SensorFrame};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct AdsConfig {
    pub sensor: SensorConfig,
    pub perception: PerceptionConfig,
    pub planner: PlannerConfig,
    pub control: ControlConfig,
}

/// Called once per stage with the variables that stage just produced.
pub trait InjectionHook {
    fn apply(&mut self, scene: usize, stage: Stage, vars: &mut Vars);
}

pub struct NoInjection;

impl InjectionHook for NoInjection {
    fn apply(&mut self, _: usize, _: Stage, _: &mut Vars) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdsOutput {
    pub vars: Vars,
    pub command: ActuationCommand,
    pub cipo: Option<Cipo>,
    /// The selected obstacle changed to a newly registered object this frame.
    pub registered: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ads {
    pub config: AdsConfig,
    pub world: WorldModel,
    long: PidChannel,
    steer: PidChannel,
    readback_long: f64,
    readback_steer: f64,
    last_cipo: Option<u32>,
}

impl Ads {
    pub fn new(config: AdsConfig) -> Self {
        Self {
            config,
            world: WorldModel::default(),
            long: PidChannel::default(),
            steer: PidChannel::default(),
            readback_long: 0.0,
            readback_steer: 0.0,
            last_cipo: None,
        }
    }

    /// Run one frame of the pipeline.
    pub fn step(&mut self, scene: usize, mut frame: SensorFrame, dt: f64, hook: &mut dyn InjectionHook) -> AdsOutput {
        let cfg = self.config;
        let mut vars = Vars::default();

        vars[var::VEHICLE_POS] = frame.inertial.pos;
        vars[var::VEHICLE_V] = frame.inertial.v;
        vars[var::VEHICLE_A] = frame.inertial.a;
        hook.apply(scene, Stage::Inertial, &mut vars);

        let cam_primary = perception::primary_observation(&frame.camera, &cfg.perception);
        let lidar_primary = perception::primary_observation(&frame.lidar, &cfg.perception);
        let horizon = cfg.perception.horizon;
        let export = |o: Option<&sensors::Observation>| match o {
            Some(o) => (o.distance, o.class.code()),
            None => (horizon, ObjectClass::None.code()),
        };
        (vars[var::CAMERA_DISTANCE], vars[var::CAMERA_CLASS]) = export(cam_primary.map(|i| &frame.camera[i]));
        (vars[var::LIDAR_DISTANCE], vars[var::LIDAR_CLASS]) = export(lidar_primary.map(|i| &frame.lidar[i]));
        hook.apply(scene, Stage::Sensor, &mut vars);
        perception::write_back_observation(
            &mut frame.camera,
            cam_primary,
            vars[var::CAMERA_DISTANCE],
            ObjectClass::from_code(vars[var::CAMERA_CLASS]),
            cfg.sensor.camera_confidence,
        );
        perception::write_back_observation(
            &mut frame.lidar,
            lidar_primary,
            vars[var::LIDAR_DISTANCE],
            ObjectClass::from_code(vars[var::LIDAR_CLASS]),
            cfg.sensor.lidar_confidence,
        );

        let ego_speed = vars[var::VEHICLE_V];
        self.world = perception::perceive(&frame.camera, &frame.lidar, &self.world, ego_speed, dt, &cfg.perception);
        let cipo = perception::select_cipo(&self.world, &cfg.perception);
        (vars[var::FUSED_DISTANCE], vars[var::FUSED_CLASS]) = match &cipo {
            Some(c) => (c.distance, c.class.code()),
            None => (horizon, ObjectClass::None.code()),
        };
        vars[var::LANE_TYPE] = frame.lane.lane_type.code();
        vars[var::LANE_WIDTH] = frame.lane.width;
        vars[var::LANE_OFFSET] = frame.lane.offset;
        vars[var::LANE_HEADING] = frame.lane.heading;
        vars[var::LANE_CURVATURE] = frame.lane.curvature;
        hook.apply(scene, Stage::Perception, &mut vars);
        let class = ObjectClass::from_code(vars[var::FUSED_CLASS]);
        let cipo = perception::write_back_cipo(cipo, vars[var::FUSED_DISTANCE], class, ego_speed);
        let registered = match (&cipo, self.last_cipo) {
            (Some(c), prev) => prev != Some(c.id),
            (None, _) => false,
        };
        self.last_cipo = cipo.as_ref().map(|c| c.id);

        let pred = planning::predict(cipo.as_ref(), ego_speed, vars[var::VEHICLE_A], dt, horizon);
        vars[var::OBSTACLE_POS] = pred.pos;
        vars[var::OBSTACLE_V] = pred.v;
        vars[var::OBSTACLE_A] = pred.a;
        hook.apply(scene, Stage::Prediction, &mut vars);

        let pred = planning::Prediction { pos: vars[var::OBSTACLE_POS], v: vars[var::OBSTACLE_V], a: vars[var::OBSTACLE_A] };
        let lane = LaneEstimate {
            lane_type: LaneType::from_code(vars[var::LANE_TYPE]),
            offset: vars[var::LANE_OFFSET],
            heading: vars[var::LANE_HEADING],
            curvature: vars[var::LANE_CURVATURE],
        };
        let raw = planning::plan(&pred, class, cipo.as_ref(), vars[var::VEHICLE_V], &lane, &cfg.planner);
        vars[var::U_THROTTLE] = raw.u_throttle;
        vars[var::U_BRAKE] = raw.u_brake;
        vars[var::U_STEER] = raw.u_steer;
        hook.apply(scene, Stage::Planning, &mut vars);

        vars[var::PID_MEASURED] = self.readback_long;
        hook.apply(scene, Stage::PidMeasure, &mut vars);

        let setpoint = vars[var::U_THROTTLE] - vars[var::U_BRAKE];
        vars[var::PID_OUTPUT] = self.long.step(setpoint, vars[var::PID_MEASURED], &cfg.control);
        let steer = self.steer.step(vars[var::U_STEER], self.readback_steer, &cfg.control);
        hook.apply(scene, Stage::PidOutput, &mut vars);

        let cmd = ActuationCommand::from_longitudinal(vars[var::PID_OUTPUT], steer);
        vars[var::THROTTLE] = cmd.throttle;
        vars[var::BRAKE] = cmd.brake;
        vars[var::STEER] = cmd.steer;
        hook.apply(scene, Stage::Actuation, &mut vars);

        let command = ActuationCommand { throttle: vars[var::THROTTLE], brake: vars[var::BRAKE], steer: vars[var::STEER] }
            .sanitized(self.readback_steer);
        self.readback_long = command.throttle - command.brake;
        self.readback_steer = command.steer;
        AdsOutput { vars, command, cipo, registered }
    }
}

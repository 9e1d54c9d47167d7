use super::robot::{Arm, FullConfig, RobotModel};
use crate::geometry::{point_in_polygon, Vec3};

/// Whole-robot center of mass in the ground frame. Link masses sit at link
/// midpoints; `payload[arm]` sits at that arm's end effector.
pub fn center_of_mass(model: &RobotModel, q: &FullConfig, payload: [f64; 2]) -> Vec3 {
    let mut moment = Vec3::from(model.body_com) * model.body_mass;
    let mut total = model.body_mass;
    let mount = model.torso_mount(q.lift);
    for arm in Arm::BOTH {
        let chain = model.chain(arm);
        let masses: Vec<f64> = chain.links.iter().map(|l| l.mass).collect();
        let mut i = 0;
        let ee = chain.compose(q.arm(arm), &mount, |f| {
            moment += (f.origin + f.link_end) * 0.5 * masses[i];
            total += masses[i];
            i += 1;
        });
        let m = payload[arm.index()];
        moment += ee.translation() * m;
        total += m;
    }
    moment / total
}

/// Whether the ground projection of the center of mass lies in the
/// embodiment's support polygon.
pub fn com_in_support(model: &RobotModel, q: &FullConfig, payload: [f64; 2]) -> bool {
    let com = center_of_mass(model, q, payload);
    point_in_polygon([com.x, com.y], &model.support_polygon)
}

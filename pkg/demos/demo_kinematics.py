"""Tour of the planar-arm plant: FK, Jacobians, and Euler rollouts."""

import numpy as np

from latact.arm import ArmGeometry, JointState, JointVelocityAction, forward_kinematics, jacobian, rollout

geometry = ArmGeometry()
print(f"single arm: {geometry.joints_per_arm} joints, reach {geometry.reach} m")

state = JointState([0.4, -0.2, 0.3, 0.1, -0.5])
pose = forward_kinematics(geometry, state)
print(f"ee position {np.round(pose.position, 3)}, orientation {pose.orientation:.3f} rad")

J = jacobian(geometry, state)
print("Jacobian (2 x 5):")
print(np.round(J, 3))

# drive the ee upward with the Jacobian transpose for a few steps
def policy(s):
    err = np.array([0.0, 0.5])
    return JointVelocityAction(jacobian(geometry, s).T @ err, cap=1.0)

trajectory = rollout(geometry, state, policy, horizon=20)
final = forward_kinematics(geometry, trajectory[-1])
print(f"after 20 steps toward +y: ee {np.round(final.position, 3)}")

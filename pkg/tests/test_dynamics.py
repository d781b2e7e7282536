"""Rigid-body kernels: FK, Jacobians, mass matrix, reflected mass, IK.

Oracles used here are deliberately independent routes:
  * a textbook closed-form model of a planar 2R arm (mass matrix, FK),
  * a from-scratch homogeneous-transform chain built straight from the YAML,
  * finite differences for Jacobians,
  * the constrained kinetic-energy minimum for reflected mass
    (the optimum of min 1/2 qd' M qd s.t. u' J qd = 1 equals m_u / 2).
"""
import math

import numpy as np
import pytest
import yaml

from pflsafe import robot_model_path
from pflsafe.dynamics import (FLANGE_DOWN, ReflectedMassQuery,
                              forward_kinematics, frame_jacobian,
                              inverse_kinematics, iso_effective_mass,
                              joint_transform, link_frames, load_robot_model,
                              manipulability, mass_matrix, point_jacobian,
                              reflected_mass, rpy_matrix)
from pflsafe.errors import (ConstrainedDirectionError, DomainError,
                            SchemaError, ValidationError)
from conftest import random_joint_configs

# planar 2R arm: both joints about +z, links along +x; point masses at the
# link tips (com at the next joint / tool point, zero rotational inertia)
A1, A2 = 0.7, 0.5
M1, M2 = 2.0, 1.5

TWO_R_YAML = f"""
name: planar-2r
end_effector:
  xyz: [{A2}, 0.0, 0.0]
  rpy: [0.0, 0.0, 0.0]
links:
  - name: upper
    joint:
      xyz: [0.0, 0.0, 0.0]
      rpy: [0.0, 0.0, 0.0]
      axis: [0.0, 0.0, 1.0]
      lower: -3.14
      upper: 3.14
    mass: {M1}
    com: [{A1}, 0.0, 0.0]
    inertia: {{ixx: 0.0, iyy: 0.0, izz: 0.0}}
  - name: lower
    joint:
      xyz: [{A1}, 0.0, 0.0]
      rpy: [0.0, 0.0, 0.0]
      axis: [0.0, 0.0, 1.0]
      lower: -3.14
      upper: 3.14
    mass: {M2}
    com: [{A2}, 0.0, 0.0]
    inertia: {{ixx: 0.0, iyy: 0.0, izz: 0.0}}
"""

PENDULUM_YAML = """
name: pendulum
end_effector: {xyz: [0.8, 0.0, 0.0], rpy: [0.0, 0.0, 0.0]}
links:
  - name: rod
    joint:
      xyz: [0.0, 0.0, 0.0]
      rpy: [0.0, 0.0, 0.0]
      axis: [0.0, 0.0, 1.0]
      lower: -3.14
      upper: 3.14
    mass: 2.5
    com: [0.8, 0.0, 0.0]
    inertia: {ixx: 0.0, iyy: 0.0, izz: 0.0}
"""

SLIDER_YAML = """
name: slider
end_effector: {xyz: [0.0, 0.0, 0.0], rpy: [0.0, 0.0, 0.0]}
links:
  - name: cart
    joint:
      type: prismatic
      xyz: [0.0, 0.0, 0.0]
      rpy: [0.0, 0.0, 0.0]
      axis: [1.0, 0.0, 0.0]
      lower: -1.0
      upper: 1.0
    mass: 3.2
    com: [0.0, 0.0, 0.0]
    inertia: {ixx: 0.0, iyy: 0.0, izz: 0.0}
"""


@pytest.fixture(scope="module")
def two_r():
    return load_robot_model(yaml_stream(TWO_R_YAML))


def yaml_stream(text):
    import io
    return io.StringIO(text)


def two_r_mass_matrix(q):
    """Textbook closed form for the point-mass 2R arm."""
    c2 = math.cos(q[1])
    m11 = M1 * A1 ** 2 + M2 * (A1 ** 2 + A2 ** 2 + 2 * A1 * A2 * c2)
    m12 = M2 * (A2 ** 2 + A1 * A2 * c2)
    m22 = M2 * A2 ** 2
    return np.array([[m11, m12], [m12, m22]])


# ------------------------------------------------- independent FK oracle

def _rpy_oracle(r, p, y):
    cr, sr, cp, sp, cy, sy = (math.cos(r), math.sin(r), math.cos(p),
                              math.sin(p), math.cos(y), math.sin(y))
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def _pose_oracle(xyz, rpy):
    t = np.eye(4)
    t[:3, :3] = _rpy_oracle(*rpy)
    t[:3, 3] = xyz
    return t


def fk_from_yaml(path, q):
    """FK built directly from the raw YAML numbers, no library code."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    t = np.eye(4)
    for spec, qi in zip(raw["links"], q):
        joint = spec["joint"]
        t = t @ _pose_oracle(joint.get("xyz", [0, 0, 0]),
                             joint.get("rpy", [0, 0, 0]))
        axis = np.asarray(joint.get("axis", [0, 0, 1]), dtype=float)
        axis /= np.linalg.norm(axis)
        if joint.get("type", "revolute") == "revolute":
            kx = np.array([[0, -axis[2], axis[1]],
                           [axis[2], 0, -axis[0]],
                           [-axis[1], axis[0], 0]])
            rot = np.eye(4)
            rot[:3, :3] = (np.eye(3) + math.sin(qi) * kx
                           + (1 - math.cos(qi)) * kx @ kx)
            t = t @ rot
        else:
            slide = np.eye(4)
            slide[:3, 3] = axis * qi
            t = t @ slide
    ee = raw.get("end_effector", {})
    return t @ _pose_oracle(ee.get("xyz", [0, 0, 0]), ee.get("rpy", [0, 0, 0]))


# ------------------------------------------------------------------ tests

def test_two_r_forward_kinematics(two_r):
    q = np.array([0.3, -0.7])
    t = forward_kinematics(two_r, q)
    x = A1 * math.cos(0.3) + A2 * math.cos(0.3 - 0.7)
    y = A1 * math.sin(0.3) + A2 * math.sin(0.3 - 0.7)
    assert t[:3, 3] == pytest.approx([x, y, 0.0], abs=1e-12)


def test_two_r_mass_matrix_closed_form(two_r, rng):
    for _ in range(25):
        q = rng.uniform(-3.0, 3.0, 2)
        assert mass_matrix(two_r, q) == pytest.approx(
            two_r_mass_matrix(q), rel=1e-9, abs=1e-12)


def test_two_r_reflected_mass_stretched(two_r):
    # arm stretched along +x: lateral push engages both point masses
    q = np.zeros(2)
    m_y = reflected_mass(
        two_r, ReflectedMassQuery(q=q, u=np.array([0.0, 1.0, 0.0])))
    j = np.array([A1 + A2, A2])  # dy/dq for the stretched arm, by hand
    want = 1.0 / (j @ np.linalg.solve(two_r_mass_matrix(q), j))
    assert m_y == pytest.approx(want, rel=1e-12)
    # radial and out-of-plane pushes are structurally constrained
    for u in ([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]):
        with pytest.raises(ConstrainedDirectionError):
            reflected_mass(two_r, ReflectedMassQuery(q=q, u=np.array(u)))


def test_pendulum_reflected_mass_is_point_mass():
    # point mass on a massless rod: tangential reflected mass at the mass
    # location is the mass itself
    model = load_robot_model(yaml_stream(PENDULUM_YAML))
    m = reflected_mass(model, ReflectedMassQuery(
        q=np.zeros(1), u=np.array([0.0, 1.0, 0.0])))
    assert m == pytest.approx(2.5, rel=1e-9)


def test_slider_reflected_mass_is_carried_mass():
    model = load_robot_model(yaml_stream(SLIDER_YAML))
    m = reflected_mass(model, ReflectedMassQuery(
        q=np.zeros(1), u=np.array([1.0, 0.0, 0.0])))
    assert m == pytest.approx(3.2, rel=1e-12)
    with pytest.raises(ConstrainedDirectionError):
        reflected_mass(model, ReflectedMassQuery(
            q=np.zeros(1), u=np.array([0.0, 1.0, 0.0])))


def test_panda_fk_matches_chain_oracle(panda, rng):
    for q in random_joint_configs(panda, rng, 20):
        assert forward_kinematics(panda, q) == pytest.approx(
            fk_from_yaml(robot_model_path(), q), abs=1e-10)


def test_point_jacobian_matches_finite_differences(panda, rng):
    h = 1e-6
    for q in random_joint_configs(panda, rng, 10):
        jac = point_jacobian(panda, q)
        fd = np.empty_like(jac)
        for j in range(panda.n):
            dq = np.zeros(panda.n)
            dq[j] = h
            fd[:, j] = (forward_kinematics(panda, q + dq)[:3, 3]
                        - forward_kinematics(panda, q - dq)[:3, 3]) / (2 * h)
        assert np.max(np.abs(jac - fd)) < 1e-6


def test_frame_jacobian_angular_rows(panda, rng):
    # d/dt R = [omega]x R: recover omega by finite differences per joint
    h = 1e-6
    for q in random_joint_configs(panda, rng, 5):
        jac = frame_jacobian(panda, q)
        rot = forward_kinematics(panda, q)[:3, :3]
        for j in range(panda.n):
            dq = np.zeros(panda.n)
            dq[j] = h
            rot_p = forward_kinematics(panda, q + dq)[:3, :3]
            rot_m = forward_kinematics(panda, q - dq)[:3, :3]
            skew = (rot_p - rot_m) / (2 * h) @ rot.T
            omega_fd = np.array([skew[2, 1], skew[0, 2], skew[1, 0]])
            assert np.max(np.abs(jac[3:, j] - omega_fd)) < 1e-5


def test_mass_matrix_symmetric_positive_definite(panda, rng):
    for q in random_joint_configs(panda, rng, 50):
        m = mass_matrix(panda, q)
        assert np.allclose(m, m.T, atol=1e-12)
        assert np.min(np.linalg.eigvalsh(m)) > 0.0


def link_frame_jacobian_oracle(model, frames, index):
    """6xN Jacobian (linear; angular) of link ``index``'s frame origin."""
    origin = frames[index][:3, 3]
    jac = np.zeros((6, model.n))
    for j in range(index + 1):
        rot = frames[j][:3, :3]
        axis = rot @ model.links[j].joint.axis
        if model.links[j].joint.kind == "revolute":
            jac[:3, j] = np.cross(axis, origin - frames[j][:3, 3])
            jac[3:, j] = axis
        else:
            jac[:3, j] = axis
    return jac


def test_mass_matrix_kinetic_energy_oracle(panda, rng):
    # KE from the joint-space inertia equals the sum of per-link rigid-body
    # energies computed link by link in world coordinates
    for q in random_joint_configs(panda, rng, 10):
        qd = rng.uniform(-1.0, 1.0, panda.n)
        ke_matrix = 0.5 * qd @ mass_matrix(panda, q) @ qd
        frames = link_frames(panda, q)
        ke_links = 0.0
        for i, link in enumerate(panda.links):
            twist = link_frame_jacobian_oracle(panda, frames, i) @ qd
            v_origin, omega = twist[:3], twist[3:]
            rot = frames[i][:3, :3]
            v_com = v_origin + np.cross(omega, rot @ link.com)
            inertia_world = rot @ link.inertia @ rot.T
            ke_links += 0.5 * link.mass * (v_com @ v_com)
            ke_links += 0.5 * omega @ inertia_world @ omega
        assert ke_matrix == pytest.approx(ke_links, rel=1e-10)


def test_reflected_mass_kinetic_energy_oracle(panda, rng):
    for q in random_joint_configs(panda, rng, 10):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        m_u = reflected_mass(panda, ReflectedMassQuery(q=q, u=u))
        # KKT solution of min 1/2 qd' M qd  s.t.  u' J qd = 1
        m = mass_matrix(panda, q)
        a = point_jacobian(panda, q).T @ u
        qd = np.linalg.solve(m, a)
        qd /= a @ qd
        assert m_u == pytest.approx(qd @ m @ qd, rel=1e-8)


def test_reflected_mass_unit_vector_enforced(panda):
    q = np.zeros(panda.n)
    with pytest.raises(ValidationError, match="unit"):
        ReflectedMassQuery(q=q, u=np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValidationError):
        ReflectedMassQuery(q=q, u=np.array([1.0, 0.0]))


def test_iso_effective_mass_reference_value(panda):
    # half the moving-link mass; the identified link set sums to 11.091448 kg
    assert abs(iso_effective_mass(panda) - 5.545) < 1e-3
    assert iso_effective_mass(panda) == pytest.approx(5.545724, abs=1e-9)
    assert iso_effective_mass(panda, payload=2.0) == pytest.approx(
        7.545724, abs=1e-9)
    with pytest.raises(DomainError):
        iso_effective_mass(panda, payload=-1.0)


def test_base_link_excluded_from_moving_mass(panda):
    # the first link spins about the vertical axis without translating
    assert not panda.links[0].moving
    moving = sum(link.mass for link in panda.links if link.moving)
    assert moving == pytest.approx(11.091448, abs=1e-9)


def test_manipulability_positive_away_from_singularity(panda):
    q = np.array([0.0, -0.3, 0.0, -1.8, 0.0, 1.6, 0.8])
    assert manipulability(panda, q) > 1e-3


def test_ik_round_trip(panda, rng):
    for q_true in random_joint_configs(panda, rng, 8):
        target = forward_kinematics(panda, q_true)[:3, 3]
        result = inverse_kinematics(panda, target, q_true)
        assert result.success
        assert result.iterations <= 2  # converged seed: immediate success
        assert result.position_error < 1e-4


def test_ik_with_orientation(panda):
    seed = 0.5 * (panda.lower_limits + panda.upper_limits)
    result = inverse_kinematics(panda, np.array([0.4, 0.2, 0.5]), seed,
                                orientation=FLANGE_DOWN)
    assert result.success
    t = forward_kinematics(panda, result.q)
    assert np.linalg.norm(t[:3, 3] - [0.4, 0.2, 0.5]) < 1e-4
    assert np.max(np.abs(t[:3, :3] - FLANGE_DOWN)) < 5e-3


def test_ik_unreachable_fails_cleanly(panda):
    seed = 0.5 * (panda.lower_limits + panda.upper_limits)
    result = inverse_kinematics(panda, np.array([1.5, 0.0, 0.5]), seed)
    assert not result.success
    assert result.position_error > 0.1


def test_ik_respects_joint_limits(panda, rng):
    seed = 0.5 * (panda.lower_limits + panda.upper_limits)
    for _ in range(5):
        target = np.array([rng.uniform(0.2, 0.6), rng.uniform(-0.4, 0.4),
                           rng.uniform(0.2, 0.8)])
        result = inverse_kinematics(panda, target, seed)
        assert np.all(result.q >= panda.lower_limits - 1e-12)
        assert np.all(result.q <= panda.upper_limits + 1e-12)


def test_rpy_matrix_orthonormal(rng):
    for _ in range(20):
        r = rpy_matrix(*rng.uniform(-math.pi, math.pi, 3))
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(r) == pytest.approx(1.0, rel=1e-12)


def test_joint_transform_zero_angle_is_fixed_origin(panda):
    link = panda.links[3]
    assert np.allclose(joint_transform(link, 0.0), link.joint.origin,
                       atol=1e-15)


# ------------------------------------------------------------ model loading

def test_model_rejects_indefinite_inertia():
    bad = TWO_R_YAML.replace("{ixx: 0.0, iyy: 0.0, izz: 0.0}",
                             "{ixx: -1.0, iyy: 0.0, izz: 0.0}", 1)
    with pytest.raises(ValidationError, match="inertia"):
        load_robot_model(yaml_stream(bad))


def test_model_rejects_bad_limits():
    bad = TWO_R_YAML.replace("lower: -3.14", "lower: 4.0", 1)
    with pytest.raises(ValidationError, match="limits"):
        load_robot_model(yaml_stream(bad))


def test_model_rejects_zero_axis():
    bad = TWO_R_YAML.replace("axis: [0.0, 0.0, 1.0]", "axis: [0.0, 0.0, 0.0]", 1)
    with pytest.raises(ValidationError, match="axis"):
        load_robot_model(yaml_stream(bad))


def test_model_rejects_missing_key():
    bad = TWO_R_YAML.replace(f"    mass: {M1}\n", "", 1)
    with pytest.raises(SchemaError, match="mass"):
        load_robot_model(yaml_stream(bad))


def test_model_rejects_unknown_joint_type():
    bad = TWO_R_YAML.replace("axis: [0.0, 0.0, 1.0]",
                             "axis: [0.0, 0.0, 1.0]\n      type: helical", 1)
    with pytest.raises(SchemaError, match="helical"):
        load_robot_model(yaml_stream(bad))


def test_wrong_joint_count_rejected(panda):
    with pytest.raises(DomainError):
        forward_kinematics(panda, np.zeros(5))

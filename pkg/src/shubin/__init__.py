"""Complex powers, zeta and eta functions of Shubin pseudo-differential operators."""

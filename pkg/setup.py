from setuptools import setup

setup(
    name="protective_pm",
    version="0.1.0",
    description="simulations of protective measurements and wave-function reconstruction",
    long_description="",
    license="MIT license",
    packages=["protective_pm", "protective_pm.hilbert", "protective_pm.evolution"],
    install_requires=[
        # Seeded sampling of Born-rule outcomes
        "torch>=1.10",
        "h5py>=3.0",
        "sacred>=0.8",
        "numpy>=1.21",

        # `gmres(..., rtol=...)`
        "scipy>=1.12",

        # Coarse dependencies
        "tqdm>=4.0,<5.0",
        "matplotlib>=3.0,<4.0",
        "pandas>=1.0",

        # Batch runs in experiments/jug
        "jug>=2.0",
    ],
    test_suite="testing",
)

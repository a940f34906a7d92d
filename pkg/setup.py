from setuptools import setup


version = open('instantonpy/VERSION').read().strip()

setup(name='instantonpy',
      version=version,
      description='Yang-Mills alpha-energies, flows and gauge fixing for the charge one instanton on S^4',
      packages=['instantonpy'],
      package_data={'instantonpy': ['VERSION']},
      entry_points={
            'console_scripts': ['instantonpy = instantonpy.cli:main']
      },
      install_requires=['numpy',
                        'scipy',
                        'pandas',
                        ])
